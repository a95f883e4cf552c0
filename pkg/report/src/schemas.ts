/** Expected CSV schemas, exactly as the producer documents them. */

export const SCHEMAS: Record<string, readonly string[]> = {
  verdicts: ["condition", "classification", "N", "partial_sum", "certified"],
  ma_decay: ["model_id", "functional", "n", "value", "se", "method", "past_id", "trunc_N"],
  quenched_ma: ["model_id", "functional", "n", "value", "se", "method", "past_id", "trunc_N"],
  stats_tests: ["test", "model_id", "n", "R", "statistic", "pvalue", "alpha", "pass", "past_id"],
  clt_cdf: ["x", "empirical", "reference"],
  wip_cdf: ["x", "empirical", "reference"],
  variance: ["model_id", "n", "quantity", "value", "err_bound"],
  variance_growth: ["model_id", "n", "var_over_n", "q90_abs", "flag"],
};

/** Manifest files the renderer knows how to draw, keyed by manifest entry. */
export const RENDERABLE = Object.keys(SCHEMAS);

export interface Manifest {
  schema: number;
  model_id: string;
  config_sha256?: string;
  files: Record<string, string>;
}
