// In-memory stand-in for the judgment service, speaking the same JSON
// dialect through a fetch-compatible function, so the page logic can
// be exercised without a network.
import type { FetchLike } from "../src/api.js";
import type {
  Aspect,
  CandidatePairView,
  JudgmentBody,
  RankedPath,
  RenderedPath,
  TrainSummary,
} from "../src/types.js";

export function makePath(
  id: string,
  hops: Array<[string, string]>,
  edgeSpecs: Array<[string, boolean]>,
): RenderedPath {
  return {
    id,
    nodes: hops.map(([label, type], i) => ({ id: `n${i}-${label}`, label, type })),
    edges: edgeSpecs.map(([base, inverted]) => ({
      type: inverted ? `${base}⁻¹` : base,
      base,
      inverted,
    })),
    length: edgeSpecs.length,
  };
}

export function makePair(
  id: string,
  a: RenderedPath,
  b: RenderedPath,
): CandidatePairView {
  return { id, pair_key: "u|i|9", kind: "random", a, b };
}

export function rankedFrom(
  path: RenderedPath,
  score: number,
  contributions: Record<string, number>,
): RankedPath {
  return { ...path, score, contributions };
}

interface StoredJudgment extends JudgmentBody {}

export class FakeService {
  pairs: CandidatePairView[] = [];
  judgments: StoredJudgment[] = [];
  rankings: Partial<Record<Aspect, RankedPath[]>> = {};
  trainDelay: Promise<void> | null = null;
  trainCalls = 0;
  requests: string[] = [];
  /** When set, every request rejects, as if the server were gone. */
  offline = false;

  get fetch(): FetchLike {
    return async (input, init) => {
      const url = new URL(input);
      this.requests.push(`${init?.method ?? "GET"} ${url.pathname}`);
      if (this.offline) throw new TypeError("fetch failed");
      return this.route(url, init);
    };
  }

  private json(status: number, body: unknown): Response {
    return new Response(JSON.stringify(body), {
      status,
      headers: { "Content-Type": "application/json" },
    });
  }

  private async route(url: URL, init?: RequestInit): Promise<Response> {
    const aspect = (url.searchParams.get("aspect") ?? "relevance") as Aspect;
    switch (url.pathname) {
      case "/feed-items":
        return this.json(200, [
          { item: "i", seen_at: 9, session: "", paths: 4, user: "u" },
        ]);
      case "/pairs": {
        const judge = url.searchParams.get("judge");
        const n = Number(url.searchParams.get("n") ?? "10");
        const done = new Set(
          this.judgments
            .filter((j) => j.aspect === aspect && (!judge || j.judge === judge))
            .map((j) => j.pair_id),
        );
        return this.json(
          200,
          this.pairs.filter((p) => !done.has(p.id)).slice(0, n),
        );
      }
      case "/judgments": {
        const body = JSON.parse(String(init?.body)) as JudgmentBody;
        const dupe = this.judgments.some(
          (j) =>
            j.pair_id === body.pair_id &&
            j.judge === body.judge &&
            j.aspect === body.aspect,
        );
        if (dupe) return this.json(409, { detail: "already judged" });
        this.judgments.push(body);
        return this.json(201, { stored: true, pair_id: body.pair_id });
      }
      case "/train": {
        this.trainCalls += 1;
        if (this.trainDelay) await this.trainDelay;
        const summary: TrainSummary = {
          aspect,
          selected_C: 1,
          dev_accuracy: 0.9,
          n_train: 8,
          n_dev: 1,
          n_held_out: 1,
        };
        return this.json(200, summary);
      }
      case "/rank": {
        const ranking = this.rankings[aspect];
        if (!ranking) return this.json(404, { detail: "no trained model" });
        const k = Number(url.searchParams.get("k") ?? "3");
        return this.json(200, {
          user: url.searchParams.get("user"),
          item: url.searchParams.get("item"),
          seen_at: 9,
          aspect,
          k,
          results: ranking.slice(0, k),
        });
      }
      default:
        return this.json(404, { detail: `no route ${url.pathname}` });
    }
  }
}
