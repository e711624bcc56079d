// Server communication: map fetch, session lifecycle, frame stream.

import { Frame, MapDocument } from "./types.js";

export async function fetchMap(baseUrl: string): Promise<MapDocument> {
  const response = await fetch(`${baseUrl}/map`);
  if (!response.ok) throw new Error(`map fetch failed: ${response.status}`);
  return (await response.json()) as MapDocument;
}

export async function createSession(
  baseUrl: string,
  scenario: unknown,
  slim = false,
): Promise<{ session_id: string; mode: string; name: string }> {
  const response = await fetch(`${baseUrl}/session`, {
    method: "POST",
    headers: { "content-type": "application/json" },
    body: JSON.stringify({ scenario, slim }),
  });
  if (!response.ok) throw new Error(`session create failed: ${await response.text()}`);
  return await response.json();
}

export async function deleteSession(baseUrl: string, sessionId: string): Promise<void> {
  await fetch(`${baseUrl}/session/${sessionId}`, { method: "DELETE" });
}

export interface StreamHandlers {
  onFrame(frame: Frame): void;
  onStatus(status: "open" | "closed" | "error"): void;
}

/** Thin wrapper over the session websocket; send() reports delivery. */
export class FrameStream {
  private ws: WebSocket;
  private open = false;

  constructor(url: string, handlers: StreamHandlers) {
    this.ws = new WebSocket(url);
    this.ws.onopen = () => {
      this.open = true;
      handlers.onStatus("open");
    };
    this.ws.onclose = () => {
      this.open = false;
      handlers.onStatus("closed");
    };
    this.ws.onerror = () => handlers.onStatus("error");
    this.ws.onmessage = (event) => {
      try {
        handlers.onFrame(JSON.parse(event.data as string) as Frame);
      } catch {
        // malformed frame: skip
      }
    };
  }

  send(message: { accel: number }): boolean {
    if (!this.open || this.ws.readyState !== 1) return false;
    this.ws.send(JSON.stringify(message));
    return true;
  }

  close(): void {
    this.ws.close();
  }
}

export function streamUrl(baseUrl: string, sessionId: string): string {
  const ws = baseUrl.replace(/^http/, "ws");
  return `${ws}/session/${sessionId}/stream`;
}
