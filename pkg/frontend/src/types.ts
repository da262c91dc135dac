// JSON shapes of the judgment service endpoints.

export type Aspect = "relevance" | "surprisal";

export const ASPECTS: Aspect[] = ["relevance", "surprisal"];

export interface FeedItemView {
  item: string;
  seen_at: number;
  session: string;
  paths: number;
  user: string;
}

export interface PathNodeView {
  id: string;
  label: string;
  type: string;
}

export interface PathEdgeView {
  /** Edge type as traversed, possibly the inverted form. */
  type: string;
  /** Platform edge type without the inversion marker. */
  base: string;
  inverted: boolean;
}

export interface RenderedPath {
  id: string;
  nodes: PathNodeView[];
  edges: PathEdgeView[];
  length: number;
}

export interface CandidatePairView {
  id: string;
  pair_key: string;
  kind: string;
  a: RenderedPath;
  b: RenderedPath;
}

export interface JudgmentBody {
  pair_id: string;
  better: string;
  worse: string;
  aspect: Aspect;
  judge: string;
  judged_at: number;
}

export interface TrainSummary {
  aspect: string;
  selected_C: number;
  dev_accuracy: number;
  n_train: number;
  n_dev: number;
  n_held_out: number;
}

export interface RankedPath extends RenderedPath {
  score: number;
  /** Per-feature score contributions, in the model's feature order. */
  contributions: Record<string, number>;
}

export interface RankResponse {
  user: string;
  item: string;
  seen_at: number;
  aspect: string;
  k: number;
  results: RankedPath[];
}

export interface StatsView {
  platform: string;
  user: string;
  nodes: number;
  edges: number;
  feed_items: number;
  mined_pairs: number;
  paths: number;
  candidates: number;
  judgments: Record<string, number>;
  transitivity: Record<string, number>;
  models: Record<string, boolean>;
}
