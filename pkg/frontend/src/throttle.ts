/** Trailing-edge rate limiter for drag updates.
 *
 * The first value in a quiet period goes out immediately; values arriving
 * inside the window are coalesced into one trailing emit carrying the
 * newest value. `flush()` (pointer-up) forces any pending value out right
 * away so the final drag position is never lost, and `cancel()` drops it.
 *
 * The clock and timer are injectable so tests can drive time by hand. */

export interface ThrottleTimers {
  now(): number;
  schedule(callback: () => void, delayMs: number): unknown;
  clear(handle: unknown): void;
}

const REAL_TIMERS: ThrottleTimers = {
  now: () => Date.now(),
  schedule: (cb, ms) => setTimeout(cb, ms),
  clear: (h) => clearTimeout(h as Parameters<typeof clearTimeout>[0]),
};

export class TrailingThrottle<T> {
  private lastEmit = -Infinity;
  private pending: { value: T } | null = null;
  private timer: unknown = null;

  constructor(
    private readonly intervalMs: number,
    private readonly emit: (value: T) => void,
    private readonly timers: ThrottleTimers = REAL_TIMERS,
  ) {}

  /** Offer a new value; emits now or schedules one trailing emit. */
  push(value: T): void {
    const now = this.timers.now();
    if (now - this.lastEmit >= this.intervalMs) {
      this.emitNow(value, now);
      return;
    }
    this.pending = { value };
    if (this.timer === null) {
      const wait = this.lastEmit + this.intervalMs - now;
      this.timer = this.timers.schedule(() => {
        this.timer = null;
        if (this.pending !== null) {
          const { value: latest } = this.pending;
          this.emitNow(latest, this.timers.now());
        }
      }, wait);
    }
  }

  /** Emit the pending value immediately, if there is one. */
  flush(): void {
    if (this.pending !== null) {
      this.emitNow(this.pending.value, this.timers.now());
    } else {
      this.clearTimer();
    }
  }

  /** Drop any pending value without emitting. */
  cancel(): void {
    this.pending = null;
    this.clearTimer();
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }

  private emitNow(value: T, now: number): void {
    this.clearTimer();
    this.pending = null;
    this.lastEmit = now;
    this.emit(value);
  }

  private clearTimer(): void {
    if (this.timer !== null) {
      this.timers.clear(this.timer);
      this.timer = null;
    }
  }
}
