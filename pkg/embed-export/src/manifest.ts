import * as fs from "fs";
import Papa from "papaparse";

import { CorpusRecord, ManifestResult } from "./types";

const REQUIRED_COLUMNS = ["id", "image_path", "question", "answer"];

/** Map a closed-form answer to its binary label; undefined if open-ended. */
export function answerToLabel(answer: string): 0 | 1 | undefined {
  const norm = answer.trim().toLowerCase();
  if (norm === "yes") return 1;
  if (norm === "no") return 0;
  return undefined;
}

/**
 * Parse a corpus manifest (CSV with header id,image_path,question,answer).
 * Rows with open-ended answers are dropped and counted, not errors.
 */
export function readManifest(path: string): ManifestResult {
  const text = fs.readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`${path}: malformed CSV at row ${e.row}: ${e.message}`);
  }
  const fields = parsed.meta.fields ?? [];
  for (const col of REQUIRED_COLUMNS) {
    if (!fields.includes(col)) {
      throw new Error(`${path}: manifest is missing column "${col}"`);
    }
  }

  const records: CorpusRecord[] = [];
  const seen = new Set<string>();
  let skippedUnmapped = 0;
  parsed.data.forEach((row, i) => {
    const id = (row.id ?? "").trim();
    if (!id) {
      throw new Error(`${path}: row ${i}: empty id`);
    }
    if (seen.has(id)) {
      throw new Error(`${path}: row ${i}: duplicate id "${id}"`);
    }
    seen.add(id);
    const label = answerToLabel(row.answer ?? "");
    if (label === undefined) {
      skippedUnmapped += 1;
      return;
    }
    records.push({
      id,
      imagePath: (row.image_path ?? "").trim(),
      question: row.question ?? "",
      answer: row.answer ?? "",
      label,
    });
  });
  return { records, skippedUnmapped };
}

/** All rows regardless of answer form, for knowledge-base export. */
export function readManifestAllRows(path: string): CorpusRecord[] {
  const text = fs.readFileSync(path, "utf-8");
  const parsed = Papa.parse<Record<string, string>>(text, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const e = parsed.errors[0];
    throw new Error(`${path}: malformed CSV at row ${e.row}: ${e.message}`);
  }
  return parsed.data.map((row, i) => {
    const id = (row.id ?? "").trim();
    if (!id) throw new Error(`${path}: row ${i}: empty id`);
    return {
      id,
      imagePath: (row.image_path ?? "").trim(),
      question: row.question ?? "",
      answer: row.answer ?? "",
      label: answerToLabel(row.answer ?? ""),
    };
  });
}
