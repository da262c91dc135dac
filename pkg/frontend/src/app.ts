import { ApiClient } from "./api.js";
import { ExplanationBrowser } from "./browser.js";
import { renderContributionBars, renderPathCard } from "./cards.js";
import { clear, el } from "./dom.js";
import { JudgmentSession } from "./session.js";
import { ASPECTS, type Aspect, type FeedItemView } from "./types.js";

const DEFAULT_API = "http://127.0.0.1:8040";

function apiBase(): string {
  const override = new URLSearchParams(location.search).get("api");
  return (override ?? DEFAULT_API).replace(/\/$/, "");
}

interface AppState {
  api: ApiClient;
  judge: string;
  aspect: Aspect;
  feed: FeedItemView[];
  session: JudgmentSession | null;
  browser: ExplanationBrowser | null;
  view: "judge" | "browse";
}

const state: AppState = {
  api: new ApiClient(apiBase()),
  judge: "",
  aspect: "relevance",
  feed: [],
  session: null,
  browser: null,
  view: "judge",
};

function statusLine(text: string, kind = ""): HTMLElement {
  return el("p", { className: `status ${kind}`.trim() }, text);
}

// ── judging view ────────────────────────────────────

function renderJudgeView(root: HTMLElement): void {
  const session = state.session;
  clear(root);
  if (!session) {
    root.appendChild(
      statusLine("Enter a judge name and press Start to begin."),
    );
    return;
  }
  const pair = session.current;
  const progress = el(
    "div",
    { className: "progress" },
    `${session.submitted} judged this session`,
  );
  root.appendChild(progress);
  if (session.hasPending) {
    root.appendChild(
      el(
        "div",
        { className: "pending" },
        statusLine("Last judgment not sent yet.", "error"),
        el(
          "button",
          {
            type: "button",
            onclick: () => {
              void session.retryPending().then(() => renderJudgeView(root));
            },
          },
          "retry",
        ),
      ),
    );
    return;
  }
  if (!pair) {
    void session.refill().then((got) => {
      if (got > 0) renderJudgeView(root);
      else
        root.appendChild(
          statusLine(`No unjudged ${session.aspect} pairs left. Thank you!`),
        );
    });
    root.appendChild(statusLine("Fetching pairs..."));
    return;
  }
  const question =
    session.aspect === "relevance"
      ? "Which explanation is more relevant?"
      : "Which explanation is more surprising?";
  const comment = el("textarea", {
    className: "comment",
    placeholder: "optional: why?",
  }) as HTMLTextAreaElement;
  const pick = (side: "a" | "b") => {
    void session.choose(side, comment.value).then((outcome) => {
      if (outcome.state === "busy") return;
      renderJudgeView(root);
    });
  };
  root.appendChild(el("h2", {}, question));
  root.appendChild(
    el(
      "div",
      { className: "pair" },
      renderPathCard(pair.a, { caption: "A", onSelect: () => pick("a") }),
      renderPathCard(pair.b, { caption: "B", onSelect: () => pick("b") }),
    ),
  );
  root.appendChild(comment);
}

// ── browsing view ───────────────────────────────────

function renderBrowseView(root: HTMLElement): void {
  const browser = state.browser;
  clear(root);
  if (!browser) {
    root.appendChild(statusLine("Pick a feed item to browse explanations."));
    return;
  }
  const controls = el(
    "div",
    { className: "browse-controls" },
    el(
      "label",
      {},
      "top ",
      el("input", {
        type: "number",
        value: String(browser.k),
        min: "1",
        onchange: (e) => {
          const k = Number((e.target as HTMLInputElement).value);
          if (k >= 1) void browser.setK(k).then(() => renderBrowseView(root));
        },
      }),
    ),
    el(
      "button",
      {
        type: "button",
        disabled: browser.training,
        onclick: () => {
          renderBrowseView(root);
          void browser.retrain().then(() => renderBrowseView(root));
        },
      },
      browser.training ? "training..." : "retrain",
    ),
  );
  root.appendChild(controls);
  if (browser.lastTrain) {
    const t = browser.lastTrain;
    root.appendChild(
      statusLine(
        `trained ${t.aspect}: dev accuracy ${t.dev_accuracy.toFixed(3)} ` +
          `(C=${t.selected_C}, ${t.n_train} train / ${t.n_dev} dev pairs)`,
      ),
    );
  }
  if (browser.error) {
    root.appendChild(statusLine(browser.error, "error"));
    return;
  }
  const list = el("ol", { className: "ranking" });
  for (const ranked of browser.ranking) {
    list.appendChild(
      el(
        "li",
        {},
        el(
          "div",
          { className: "rank-row" },
          renderPathCard(ranked),
          el("span", { className: "score" }, ranked.score.toFixed(4)),
        ),
        renderContributionBars(ranked),
      ),
    );
  }
  root.appendChild(list);
}

// ── shell ───────────────────────────────────────────

function renderShell(app: HTMLElement): void {
  clear(app);
  const main = el("main", {});
  const judgeInput = el("input", {
    type: "text",
    placeholder: "judge name",
    value: state.judge,
  }) as HTMLInputElement;
  const aspectSelect = el(
    "select",
    {
      onchange: (e) => {
        state.aspect = (e.target as HTMLSelectElement).value as Aspect;
      },
    },
    ...ASPECTS.map((a) =>
      el("option", { value: a, selected: a === state.aspect }, a),
    ),
  );
  const itemSelect = el(
    "select",
    {},
    ...state.feed.map((f) => el("option", { value: f.item }, f.item)),
  ) as HTMLSelectElement;
  const start = () => {
    state.judge = judgeInput.value.trim();
    if (!state.judge) {
      window.alert("enter a judge name first");
      return;
    }
    if (state.view === "judge") {
      state.session = new JudgmentSession(state.api, state.aspect, state.judge);
      renderJudgeView(main);
    } else {
      const user = state.feed[0]?.user ?? "";
      state.browser = new ExplanationBrowser(
        state.api,
        user,
        itemSelect.value,
        state.aspect,
      );
      void state.browser.load().then(() => renderBrowseView(main));
    }
  };
  const tab = (view: "judge" | "browse", label: string) =>
    el(
      "button",
      {
        type: "button",
        className: state.view === view ? "tab active" : "tab",
        onclick: () => {
          state.view = view;
          renderShell(app);
        },
      },
      label,
    );
  app.appendChild(
    el(
      "header",
      {},
      el("h1", {}, "explanation judgments"),
      el(
        "nav",
        {},
        tab("judge", "judge pairs"),
        tab("browse", "browse rankings"),
      ),
      el(
        "div",
        { className: "controls" },
        judgeInput,
        aspectSelect,
        state.view === "browse" ? itemSelect : null,
        el("button", { type: "button", onclick: start }, "start"),
      ),
    ),
  );
  app.appendChild(main);
  if (state.view === "judge") renderJudgeView(main);
  else renderBrowseView(main);
}

async function boot(): Promise<void> {
  const app = document.getElementById("app");
  if (!app) return;
  try {
    state.feed = await state.api.feedItems();
  } catch (err) {
    app.appendChild(
      statusLine(
        `cannot reach the judgment service at ${state.api.baseUrl}: ` +
          (err instanceof Error ? err.message : String(err)),
        "error",
      ),
    );
    return;
  }
  renderShell(app);
}

void boot();
