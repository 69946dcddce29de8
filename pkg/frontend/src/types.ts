// Shapes of the campaign service's JSON payloads. The dashboard renders
// these verbatim and performs no statistical computation of its own.

export interface DensityCurve {
  x: number[];
  y: number[];
}

export interface PosteriorCell {
  successes: number;
  trials: number;
  mean: number;
  q05: number;
  q25: number;
  q50: number;
  q75: number;
  q95: number;
  density: DensityCurve;
}

export interface Comparison {
  policies: string[];
  significant: boolean[][];
  alpha_fwer: number;
  cld: Record<string, string>;
}

export interface Progress {
  collected: number;
  target: number;
}

export interface Campaign {
  id: string;
  name: string;
  policies: string[];
  tasks: string[];
  target_rollouts: Record<string, number>;
  status: "active" | "stopped";
  rollout_count: number;
}

export interface Summary {
  campaign: Campaign;
  view: string;
  progress: Record<string, Record<string, Progress>>;
  policies: string[];
  tasks: string[];
  record_count: number;
  per_task?: Record<string, Record<string, PosteriorCell>>;
  comparison: Record<string, Comparison | null> | Comparison | null;
  aggregate: Record<string, PosteriorCell | null>;
  aggregate_comparison?: Comparison | null;
}

export interface Rollout {
  policy: string;
  task: string;
  seed: number;
  success: boolean;
  timestamp: string;
  video_uri?: string | null;
}
