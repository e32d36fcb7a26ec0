import { ApiClient } from "./api.js";
import type { Decision, ReviewItem, Stats, Verdict } from "./types.js";

export interface SessionState {
  item: ReviewItem | null;
  stats: Stats | null;
  /** true once the queue is exhausted (distinct from "loading"). */
  queueEmpty: boolean;
  /** non-null when the service is unreachable or a submit failed. */
  banner: string | null;
  /** decisions awaiting a successful POST; never silently dropped. */
  unsent: number;
}

/** Review-loop state machine: fetch next, decide, advance.
 *
 * Decisions enter a retry queue and are flushed one at a time (at most one
 * in-flight POST). The session advances after the flush settles, whether or
 * not it succeeded; failed decisions stay queued and are retried before the
 * next submit or via retry().
 */
export class ReviewSession {
  private item: ReviewItem | null = null;
  private stats: Stats | null = null;
  private queueEmpty = false;
  private banner: string | null = null;
  private retryQueue: Decision[] = [];
  private flushing = false;
  private deciding = false;

  constructor(
    private readonly api: ApiClient,
    private readonly reviewer: string,
    private readonly onChange: (state: SessionState) => void = () => {},
  ) {}

  state(): SessionState {
    return {
      item: this.item,
      stats: this.stats,
      queueEmpty: this.queueEmpty,
      banner: this.banner,
      unsent: this.retryQueue.length,
    };
  }

  private notify(): void {
    this.onChange(this.state());
  }

  async start(): Promise<void> {
    await this.refreshStats();
    await this.advance();
  }

  async refreshStats(): Promise<void> {
    try {
      this.stats = await this.api.stats();
    } catch {
      // stats are cosmetic; the banner is handled by advance/flush
    }
    this.notify();
  }

  async advance(): Promise<void> {
    try {
      this.item = await this.api.nextItem(this.reviewer);
      this.queueEmpty = this.item === null;
      if (this.retryQueue.length === 0) {
        this.banner = null;
      }
    } catch (err) {
      this.item = null;
      this.queueEmpty = false;
      this.banner = `service unreachable — ${String(err)}`;
    }
    this.notify();
  }

  /** Handle one verdict keystroke for the current item.
   *
   * While a decision is unsent the current item stays on screen and new
   * keystrokes are ignored; advancing would make the server re-serve the
   * still-undecided item and invite duplicate decisions.
   */
  async decide(verdict: Verdict): Promise<void> {
    if (this.item === null || this.deciding || this.retryQueue.length > 0) {
      return;
    }
    this.deciding = true;
    this.retryQueue.push({
      item_id: this.item.item_id,
      verdict,
      reviewer_id: this.reviewer,
    });
    try {
      await this.flush();
      if (this.retryQueue.length === 0) {
        await this.refreshStats();
        await this.advance();
      }
    } finally {
      this.deciding = false;
    }
    this.notify();
  }

  /** POST queued decisions in order; stop at the first failure. */
  async flush(): Promise<void> {
    if (this.flushing) {
      return;
    }
    this.flushing = true;
    try {
      while (this.retryQueue.length > 0) {
        const head = this.retryQueue[0];
        try {
          await this.api.submitDecision(head);
          this.retryQueue.shift();
          this.banner = null;
        } catch (err) {
          this.banner = `decision kept locally, will retry — ${String(err)}`;
          break;
        }
      }
    } finally {
      this.flushing = false;
    }
    this.notify();
  }

  /** Banner action: retry unsent decisions, then reload the queue. */
  async retry(): Promise<void> {
    await this.flush();
    if (this.retryQueue.length === 0) {
      await this.refreshStats();
      await this.advance();
    }
  }
}
