import { ApiError, type ApiClient } from "./api.js";
import type { Aspect, RankedPath, TrainSummary } from "./types.js";

/** Ranked-explanation view state for one user and feed item.
 *
 * `ranking` is always exactly the server's result array: the page
 * never reorders it, so what is displayed is the model's own order.
 * Retraining is guarded: while one train call runs, further retrain
 * requests are refused so the button can simply mirror `training`.
 */
export class ExplanationBrowser {
  ranking: RankedPath[] = [];
  /** Set when the last load failed, e.g. no trained model yet. */
  error: string | null = null;
  training = false;
  lastTrain: TrainSummary | null = null;

  constructor(
    private readonly api: ApiClient,
    readonly user: string,
    public item: string,
    public aspect: Aspect,
    public k = 3,
  ) {}

  async load(): Promise<void> {
    try {
      const res = await this.api.rank(this.user, this.item, this.aspect, this.k);
      this.ranking = res.results;
      this.error = null;
    } catch (err) {
      this.ranking = [];
      this.error =
        err instanceof ApiError && err.status === 404
          ? `${err.message} (train a ${this.aspect} model first)`
          : err instanceof Error
            ? err.message
            : String(err);
    }
  }

  async setAspect(aspect: Aspect): Promise<void> {
    this.aspect = aspect;
    await this.load();
  }

  async setItem(item: string): Promise<void> {
    this.item = item;
    await this.load();
  }

  async setK(k: number): Promise<void> {
    this.k = k;
    await this.load();
  }

  /** Retrain the current aspect's model, then refresh the ranking.
   * Returns null when a train call is already running. */
  async retrain(): Promise<TrainSummary | null> {
    if (this.training) return null;
    this.training = true;
    try {
      this.lastTrain = await this.api.train(this.aspect);
    } catch (err) {
      this.error = err instanceof Error ? err.message : String(err);
      return null;
    } finally {
      this.training = false;
    }
    await this.load();
    return this.lastTrain;
  }
}
