// WebSocket stream client with automatic reconnect. On every (re)open
// the owner resynchronizes via the GET endpoints, so dropped backlog is
// harmless.

import type { StreamEvent } from './types.js';

export interface WebSocketLike {
  onopen: ((ev?: unknown) => void) | null;
  onclose: ((ev?: unknown) => void) | null;
  onmessage: ((ev: { data: unknown }) => void) | null;
  close(): void;
}

export type WebSocketFactory = (url: string) => WebSocketLike;

export interface StreamHandlers {
  onEvent(event: StreamEvent): void;
  onOpen?(): void;
  onClose?(): void;
}

const RECONNECT_DELAY_MS = 1000;

export class StreamClient {
  private socket: WebSocketLike | null = null;
  private stopped = false;
  private timer: ReturnType<typeof setTimeout> | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly factory: WebSocketFactory,
    private readonly reconnectDelayMs: number = RECONNECT_DELAY_MS,
  ) {}

  connect(): void {
    this.stopped = false;
    this.open();
  }

  private open(): void {
    const socket = this.factory(this.url);
    this.socket = socket;
    socket.onopen = () => this.handlers.onOpen?.();
    socket.onmessage = (message) => {
      try {
        this.handlers.onEvent(JSON.parse(String(message.data)) as StreamEvent);
      } catch {
        // Malformed frame: ignore; the next resync repairs any gap.
      }
    };
    socket.onclose = () => {
      this.handlers.onClose?.();
      if (!this.stopped) {
        this.timer = setTimeout(() => this.open(), this.reconnectDelayMs);
      }
    };
  }

  close(): void {
    this.stopped = true;
    if (this.timer !== null) {
      clearTimeout(this.timer);
      this.timer = null;
    }
    this.socket?.close();
  }
}
