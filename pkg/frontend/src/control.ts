// Keyboard to control-message loop: accelerate +2, brake -4, idle 0,
// sent at most once per period while the session socket is open.

export const ACCEL = 2.0;
export const BRAKE = -4.0;
export const SEND_PERIOD_MS = 100;

export interface ControlSink {
  send(message: { accel: number }): boolean; // false when the socket is closed
}

const ACCEL_KEYS = new Set(["ArrowUp", "w", "W"]);
const BRAKE_KEYS = new Set(["ArrowDown", "s", "S", " "]);

export class ControlLoop {
  private accelHeld = false;
  private brakeHeld = false;
  private timer: ReturnType<typeof setInterval> | null = null;
  dropped = 0; // messages lost to a closed socket

  constructor(private sink: ControlSink, private periodMs: number = SEND_PERIOD_MS) {}

  keyDown(key: string): void {
    if (ACCEL_KEYS.has(key)) this.accelHeld = true;
    if (BRAKE_KEYS.has(key)) this.brakeHeld = true;
  }

  keyUp(key: string): void {
    if (ACCEL_KEYS.has(key)) this.accelHeld = false;
    if (BRAKE_KEYS.has(key)) this.brakeHeld = false;
  }

  currentAccel(): number {
    if (this.brakeHeld) return BRAKE; // braking wins over throttle
    if (this.accelHeld) return ACCEL;
    return 0;
  }

  tick(): void {
    if (!this.sink.send({ accel: this.currentAccel() })) this.dropped += 1;
  }

  start(): void {
    if (this.timer !== null) return;
    this.timer = setInterval(() => this.tick(), this.periodMs);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}
