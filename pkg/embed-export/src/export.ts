import * as fs from "fs";

import { encodeImageFile, IMAGE_ENCODER_NAME } from "./imageEncoder";
import { readManifest, readManifestAllRows } from "./manifest";
import { encodeText, TEXT_ENCODER_NAME } from "./textEncoder";
import {
  DatasetSample,
  IMAGE_DIM,
  KnowledgeEntry,
  OutputFormat,
  TEXT_DIM,
} from "./types";
import { writeDataset, writeKnowledgeBase } from "./writers";

export interface ExportStats {
  written: number;
  skippedUnmapped: number;
  textEncoder: string;
  imageEncoder: string;
}

function writeSidecar(outPath: string, stats: ExportStats): void {
  // pins the encoder identities next to the artifact for provenance
  fs.writeFileSync(
    `${outPath}.meta.json`,
    JSON.stringify(
      {
        text_encoder: stats.textEncoder,
        image_encoder: stats.imageEncoder,
        written: stats.written,
        skipped_unmapped: stats.skippedUnmapped,
      },
      null,
      2
    ) + "\n"
  );
}

/**
 * Encode every closed-form (yes/no) manifest row into a dataset file with
 * 768-d question embeddings and 2048-d image embeddings.
 */
export function exportDataset(
  manifestPath: string,
  outPath: string,
  format: OutputFormat
): ExportStats {
  const { records, skippedUnmapped } = readManifest(manifestPath);
  if (records.length === 0) {
    throw new Error(`${manifestPath}: no rows with yes/no answers to export`);
  }
  const samples: DatasetSample[] = records.map((r) => ({
    id: r.id,
    label: r.label as 0 | 1,
    textEmb: encodeText(r.question),
    imageEmb: encodeImageFile(r.imagePath),
  }));
  writeDataset(samples, TEXT_DIM, IMAGE_DIM, outPath, format);
  const stats = {
    written: samples.length,
    skippedUnmapped,
    textEncoder: TEXT_ENCODER_NAME,
    imageEncoder: IMAGE_ENCODER_NAME,
  };
  writeSidecar(outPath, stats);
  return stats;
}

/**
 * Encode every manifest row (open-ended answers included) into a knowledge
 * base: key = 768-d embedding of the QA text, payload = the QA text itself.
 */
export function exportKnowledge(
  manifestPath: string,
  outPath: string,
  format: OutputFormat
): ExportStats {
  const rows = readManifestAllRows(manifestPath);
  if (rows.length === 0) {
    throw new Error(`${manifestPath}: empty corpus`);
  }
  const entries: KnowledgeEntry[] = rows.map((r) => {
    const payload = `Q: ${r.question} A: ${r.answer}`;
    return { id: r.id, keyEmb: encodeText(payload), payload };
  });
  writeKnowledgeBase(entries, TEXT_DIM, outPath, format);
  const stats = {
    written: entries.length,
    skippedUnmapped: 0,
    textEncoder: TEXT_ENCODER_NAME,
    imageEncoder: IMAGE_ENCODER_NAME,
  };
  writeSidecar(outPath, stats);
  return stats;
}
