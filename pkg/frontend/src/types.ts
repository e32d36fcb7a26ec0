/** Payload shapes of the review service API (the single source of truth:
 *  the UI never computes similarity or agreement itself). */

export type Outcome = "agree" | "disagree" | "missing";

export interface RecordFields {
  record_id: string;
  first_name: string | null;
  middle_name: string | null;
  last_name: string | null;
  birth_date: string | null;
  sex: string | null;
  ssn: string | null;
  address: string | null;
}

export interface ReviewItem {
  item_id: string;
  left: RecordFields;
  right: RecordFields;
  overall_score: number;
  outcomes: Record<string, Outcome>;
  status: string;
}

export interface Stats {
  pending: number;
  decided: number;
  skipped: number;
}

export type Verdict = "Match" | "NonMatch" | "Unsure";

export interface Decision {
  item_id: string;
  verdict: Verdict;
  reviewer_id: string;
}

/** The seven canonical fields, in display order. */
export const FIELD_ORDER: ReadonlyArray<[keyof RecordFields, string]> = [
  ["first_name", "First Name"],
  ["middle_name", "Middle Name"],
  ["last_name", "Last Name"],
  ["birth_date", "Date of Birth"],
  ["ssn", "SSN"],
  ["sex", "Sex"],
  ["address", "Address"],
];
