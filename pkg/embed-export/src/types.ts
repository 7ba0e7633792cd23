export interface CorpusRecord {
  id: string;
  imagePath: string;
  question: string;
  answer: string;
  /** 1 for "yes", 0 for "no"; undefined when the answer is open-ended */
  label?: 0 | 1;
}

export interface ManifestResult {
  records: CorpusRecord[];
  /** rows dropped because the answer had no closed-form label */
  skippedUnmapped: number;
}

export interface DatasetSample {
  id: string;
  label: 0 | 1;
  textEmb: Float64Array;
  imageEmb: Float64Array;
}

export interface KnowledgeEntry {
  id: string;
  keyEmb: Float64Array;
  payload: string;
}

export const TEXT_DIM = 768;
export const IMAGE_DIM = 2048;

export type OutputFormat = "binary" | "jsonl";
