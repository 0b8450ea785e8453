// Wire types, mirroring the service JSON field for field.

export type ChannelSpec = {
  channel_id: string;
  kind: string;
  unit: string;
  weight: number;
};

export type ChannelScore = {
  distance: number;
  similarity_percent: number;
};

export type Report = {
  baseline_id: string;
  window: { t_start: number; t_end: number; n_samples: number };
  per_channel: Record<string, ChannelScore>;
  aggregate_percent: number;
  method: string;
  computed_at: number;
  skipped_channels: string[];
};

export type Alert = {
  alert_id: string;
  raised_at: number;
  baseline_id: string;
  rank_percent: number;
  predicted_event_time: number;
  cleared_at: number | null;
};

export type BaselineDoc = {
  baseline_id: string;
  label: string;
  event_time: number;
  lead_time: number;
  created_at: number;
  window: { t_start: number; t_end: number; n_samples: number };
};

export type Policy = {
  theta_on: number;
  theta_off: number;
  min_consecutive: number;
  baseline_id: string;
};

export type SimilaritySettings = {
  method: string;
  znormalize: boolean;
  dtw_band: number | string;
  tau: number;
  channel_weights: Record<string, number>;
  channel_mode: string;
};

export type ServiceConfig = {
  policy: Policy;
  similarity: SimilaritySettings;
};

export type StatusDoc = {
  watermark: number | null;
  channels: Record<string, { first: number; last: number }>;
  baselines: number;
  alerts_total: number;
  firing: string[];
};

export type TraceDoc = {
  watermark: number | null;
  channels: Record<string, { t: number[]; v: number[] }>;
};
