import type { ApiClient, SubmitStatus } from "./api.js";
import type { Aspect, CandidatePairView, JudgmentBody } from "./types.js";

export type ChoiceOutcome =
  | { state: "stored" | "duplicate" }
  /** A submit is already running; the click is dropped. */
  | { state: "busy" }
  /** Nothing to judge right now. */
  | { state: "empty" }
  /** The POST failed; the judgment is kept for retryPending. */
  | { state: "offline"; detail: string };

export interface SessionComment {
  pair_id: string;
  aspect: Aspect;
  judge: string;
  text: string;
}

interface PendingJudgment {
  body: JudgmentBody;
  comment: string;
}

/** One judge's pass over the unjudged pair queue for one aspect.
 *
 * The queue comes from the server in batches; choosing a side posts a
 * judgment and advances. At most one POST is in flight, so a double
 * click cannot file twice: the second click lands while the first is
 * pending and is dropped. A network failure keeps the unsent judgment
 * (and its comment) for an explicit retry.
 */
export class JudgmentSession {
  private queue: CandidatePairView[] = [];
  private cursor = 0;
  private inFlight = false;
  private pending: PendingJudgment | null = null;
  /** Count of judgments committed on the server this session. */
  submitted = 0;
  /** Free-text remarks, kept with the session; the judgment records
   * on the server carry no comment field. */
  readonly comments: SessionComment[] = [];

  constructor(
    private readonly api: ApiClient,
    readonly aspect: Aspect,
    readonly judge: string,
    private readonly batchSize = 10,
  ) {}

  get current(): CandidatePairView | null {
    return this.queue[this.cursor] ?? null;
  }

  get hasPending(): boolean {
    return this.pending !== null;
  }

  /** Fetch the next batch of unjudged pairs; returns how many arrived. */
  async refill(): Promise<number> {
    const batch = await this.api.pairs(this.aspect, this.batchSize, this.judge);
    this.queue = batch;
    this.cursor = 0;
    return batch.length;
  }

  /** Judge the current pair: `side` names the better path. */
  async choose(side: "a" | "b", comment = ""): Promise<ChoiceOutcome> {
    if (this.inFlight) return { state: "busy" };
    if (this.pending) return { state: "offline", detail: "retry pending" };
    const pair = this.current;
    if (!pair) return { state: "empty" };
    const better = side === "a" ? pair.a.id : pair.b.id;
    const worse = side === "a" ? pair.b.id : pair.a.id;
    const body: JudgmentBody = {
      pair_id: pair.id,
      better,
      worse,
      aspect: this.aspect,
      judge: this.judge,
      judged_at: Math.floor(Date.now() / 1000),
    };
    return this.post({ body, comment });
  }

  /** Resend the judgment kept from a failed submit. */
  async retryPending(): Promise<ChoiceOutcome> {
    if (this.inFlight) return { state: "busy" };
    if (!this.pending) return { state: "empty" };
    const attempt = this.pending;
    this.pending = null;
    return this.post(attempt);
  }

  private async post(attempt: PendingJudgment): Promise<ChoiceOutcome> {
    this.inFlight = true;
    let status: SubmitStatus;
    try {
      status = await this.api.submitJudgment(attempt.body);
    } catch (err) {
      this.pending = attempt;
      return {
        state: "offline",
        detail: err instanceof Error ? err.message : String(err),
      };
    } finally {
      this.inFlight = false;
    }
    // a duplicate means the record was already committed (for example
    // a retry after a response that was lost in transit): either way
    // the server holds exactly one record, so the session advances
    this.submitted += 1;
    if (attempt.comment.trim()) {
      this.comments.push({
        pair_id: attempt.body.pair_id,
        aspect: this.aspect,
        judge: this.judge,
        text: attempt.comment.trim(),
      });
    }
    this.cursor += 1;
    return { state: status };
  }
}
