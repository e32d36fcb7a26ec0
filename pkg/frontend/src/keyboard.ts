import type { Verdict } from "./types.js";

const KEY_MAP: Record<string, Verdict> = {
  m: "Match",
  n: "NonMatch",
  u: "Unsure",
};

/** Map a keystroke to a verdict; null for unbound keys or while typing in
 *  a form field. */
export function verdictForKey(
  key: string,
  target?: { tagName?: string } | null,
): Verdict | null {
  const tag = target?.tagName?.toUpperCase();
  if (tag === "INPUT" || tag === "TEXTAREA" || tag === "SELECT") {
    return null;
  }
  return KEY_MAP[key.toLowerCase()] ?? null;
}

export function bindKeyboard(
  doc: Document,
  onVerdict: (verdict: Verdict) => void,
): () => void {
  const handler = (event: KeyboardEvent) => {
    if (event.ctrlKey || event.metaKey || event.altKey) {
      return;
    }
    const verdict = verdictForKey(event.key, event.target as HTMLElement);
    if (verdict !== null) {
      event.preventDefault();
      onVerdict(verdict);
    }
  };
  doc.addEventListener("keydown", handler);
  return () => doc.removeEventListener("keydown", handler);
}
