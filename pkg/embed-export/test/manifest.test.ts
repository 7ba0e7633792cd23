import * as fs from "fs";
import * as os from "os";
import * as path from "path";

import { describe, expect, it } from "vitest";

import { answerToLabel, readManifest, readManifestAllRows } from "../src/manifest";

function writeManifest(lines: string[]): string {
  const dir = fs.mkdtempSync(path.join(os.tmpdir(), "manifest-"));
  const file = path.join(dir, "corpus.csv");
  fs.writeFileSync(file, lines.join("\n") + "\n");
  return file;
}

describe("answer mapping", () => {
  it("maps yes/no case-insensitively", () => {
    expect(answerToLabel("yes")).toBe(1);
    expect(answerToLabel(" No ")).toBe(0);
    expect(answerToLabel("YES")).toBe(1);
  });

  it("leaves open-ended answers unmapped", () => {
    expect(answerToLabel("left lung")).toBeUndefined();
    expect(answerToLabel("")).toBeUndefined();
  });
});

describe("manifest parsing", () => {
  it("reads rows and counts skipped open-ended answers", () => {
    const file = writeManifest([
      "id,image_path,question,answer",
      "r1,/img/a.ppm,Is there a lesion?,yes",
      "r2,/img/b.ppm,Which lobe is affected?,upper left",
      "r3,/img/c.ppm,Is the heart enlarged?,no",
    ]);
    const result = readManifest(file);
    expect(result.records.map((r) => r.id)).toEqual(["r1", "r3"]);
    expect(result.records[0].label).toBe(1);
    expect(result.records[1].label).toBe(0);
    expect(result.skippedUnmapped).toBe(1);
  });

  it("handles quoted questions with commas", () => {
    const file = writeManifest([
      "id,image_path,question,answer",
      'r1,/img/a.ppm,"Is there fluid, air, or both?",no',
    ]);
    const result = readManifest(file);
    expect(result.records[0].question).toBe("Is there fluid, air, or both?");
  });

  it("rejects duplicate ids", () => {
    const file = writeManifest([
      "id,image_path,question,answer",
      "r1,/a.ppm,q?,yes",
      "r1,/b.ppm,q2?,no",
    ]);
    expect(() => readManifest(file)).toThrow(/duplicate id/);
  });

  it("rejects missing columns", () => {
    const file = writeManifest(["id,question,answer", "r1,q?,yes"]);
    expect(() => readManifest(file)).toThrow(/image_path/);
  });

  it("keeps open-ended rows for knowledge export", () => {
    const file = writeManifest([
      "id,image_path,question,answer",
      "r1,/a.ppm,What modality is this?,MRI",
      "r2,/b.ppm,Any mass?,no",
    ]);
    expect(readManifestAllRows(file)).toHaveLength(2);
  });
});
