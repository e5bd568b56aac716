/**
 * Event-stream consumer with gap-free resume.
 *
 * Wraps an EventSource-like object; on error the source is closed and a
 * reconnect is scheduled at the index the caller reports as safely
 * consumed (see state.resumeIndex).  The EventSource constructor and the
 * timer are injectable so tests can drive the whole lifecycle manually.
 */

export interface EventSourceLike {
  addEventListener(
    type: string,
    listener: (event: MessageEvent<string>) => void,
  ): void;
  close(): void;
  onerror: ((this: unknown, ev: unknown) => void) | null;
  onopen: ((this: unknown, ev: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export type StreamHandler = (name: string, data: unknown) => void;

export interface SessionStreamOptions {
  /** Builds the stream URL for a given resume index. */
  urlFor: (since: number) => string;
  /** Receives every named event, already JSON-parsed. */
  onEvent: StreamHandler;
  /** Reports the resume index to use for the next (re)connect. */
  getResumeIndex: () => number;
  /** Connection status callback for the UI banner. */
  onStatus?: (status: "open" | "retrying" | "closed") => void;
  factory?: EventSourceFactory;
  retryMs?: number;
  schedule?: (fn: () => void, ms: number) => unknown;
  cancel?: (handle: unknown) => void;
}

export const EVENT_NAMES = ["discovery", "metrics", "state", "roi_applied"] as const;

export class SessionStream {
  private source: EventSourceLike | null = null;
  private timer: unknown = null;
  private closed = false;
  private readonly opts: Required<
    Pick<SessionStreamOptions, "factory" | "retryMs" | "schedule" | "cancel">
  > &
    SessionStreamOptions;

  constructor(options: SessionStreamOptions) {
    this.opts = {
      factory: (url: string) =>
        new EventSource(url) as unknown as EventSourceLike,
      retryMs: 1000,
      schedule: (fn, ms) => setTimeout(fn, ms),
      cancel: (handle) => clearTimeout(handle as number),
      ...options,
    };
  }

  connect(): void {
    if (this.closed || this.source) return;
    const since = this.opts.getResumeIndex();
    const source = this.opts.factory(this.opts.urlFor(since));
    this.source = source;
    for (const name of EVENT_NAMES) {
      source.addEventListener(name, (event) => {
        this.opts.onEvent(name, JSON.parse(event.data));
      });
    }
    source.onopen = () => this.opts.onStatus?.("open");
    source.onerror = () => {
      // A server that closed the stream (session done) also lands here;
      // reconnecting is harmless because the replay is deduplicated.
      source.close();
      if (this.source === source) this.source = null;
      if (this.closed) return;
      this.opts.onStatus?.("retrying");
      this.timer = this.opts.schedule(() => {
        this.timer = null;
        this.connect();
      }, this.opts.retryMs);
    };
  }

  close(): void {
    this.closed = true;
    if (this.timer !== null) {
      this.opts.cancel(this.timer);
      this.timer = null;
    }
    this.source?.close();
    this.source = null;
    this.opts.onStatus?.("closed");
  }
}
