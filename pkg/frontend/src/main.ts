import { ApiClient } from "./api.js";
import { bindKeyboard } from "./keyboard.js";
import { renderState } from "./render.js";
import { ReviewSession } from "./session.js";

const STATS_POLL_MS = 5000;

function reviewerId(): string {
  const params = new URLSearchParams(window.location.search);
  const fromUrl = params.get("reviewer");
  if (fromUrl) {
    return fromUrl;
  }
  const stored = window.localStorage.getItem("reviewer_id");
  if (stored) {
    return stored;
  }
  const generated = `reviewer-${Math.random().toString(36).slice(2, 8)}`;
  window.localStorage.setItem("reviewer_id", generated);
  return generated;
}

function boot(): void {
  const api = new ApiClient("");
  const session = new ReviewSession(api, reviewerId(), (state) =>
    renderState(document, state),
  );

  bindKeyboard(document, (verdict) => void session.decide(verdict));

  document.getElementById("retry")?.addEventListener("click", () =>
    void session.retry(),
  );
  for (const [id, verdict] of [["btn-match", "Match"],
                               ["btn-nonmatch", "NonMatch"],
                               ["btn-unsure", "Unsure"]] as const) {
    document.getElementById(id)?.addEventListener("click", () =>
      void session.decide(verdict),
    );
  }

  window.setInterval(() => void session.refreshStats(), STATS_POLL_MS);
  void session.start();
}

boot();
