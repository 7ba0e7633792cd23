/**
 * Serializers for the consumer's dataset/knowledge file formats.
 *
 * Binary layouts (little-endian, float32 vectors):
 *   QFSE: magic "QFSE", u16 version=1, u32 n, u32 d_t, u32 d_v; per record
 *         u32 id-length, UTF-8 id, u8 label, d_t f32, d_v f32.
 *   QFKB: magic "QFKB", u16 version=1, u32 n, u32 d_k; per entry u32
 *         id-length, id, u32 payload-length, UTF-8 payload, d_k f32.
 * JSONL: header object then one record object per line.
 */

import * as fs from "fs";

import { DatasetSample, KnowledgeEntry, OutputFormat } from "./types";

function f32Bytes(vec: Float64Array): Buffer {
  const buf = Buffer.alloc(4 * vec.length);
  for (let i = 0; i < vec.length; i++) {
    buf.writeFloatLE(vec[i], 4 * i);
  }
  return buf;
}

/** float64 -> float32 -> float64, the value a reader will see. */
export function roundTripF32(vec: Float64Array): Float64Array {
  return Float64Array.from(Float32Array.from(vec));
}

export function writeDataset(
  samples: DatasetSample[],
  dT: number,
  dV: number,
  path: string,
  format: OutputFormat
): void {
  if (samples.length === 0) {
    throw new Error("refusing to write an empty dataset");
  }
  for (const s of samples) {
    if (s.textEmb.length !== dT || s.imageEmb.length !== dV) {
      throw new Error(`sample ${s.id}: embedding dims do not match ${dT}/${dV}`);
    }
  }
  if (format === "jsonl") {
    const lines = [JSON.stringify({ d_t: dT, d_v: dV })];
    for (const s of samples) {
      lines.push(
        JSON.stringify({
          id: s.id,
          label: s.label,
          text_emb: Array.from(s.textEmb),
          image_emb: Array.from(s.imageEmb),
        })
      );
    }
    fs.writeFileSync(path, lines.join("\n") + "\n");
    return;
  }
  const parts: Buffer[] = [];
  const header = Buffer.alloc(4 + 2 + 4 + 4 + 4);
  header.write("QFSE", 0, "ascii");
  header.writeUInt16LE(1, 4);
  header.writeUInt32LE(samples.length, 6);
  header.writeUInt32LE(dT, 10);
  header.writeUInt32LE(dV, 14);
  parts.push(header);
  for (const s of samples) {
    const id = Buffer.from(s.id, "utf-8");
    const lead = Buffer.alloc(4);
    lead.writeUInt32LE(id.length, 0);
    parts.push(lead, id, Buffer.from([s.label]), f32Bytes(s.textEmb), f32Bytes(s.imageEmb));
  }
  fs.writeFileSync(path, Buffer.concat(parts));
}

export function writeKnowledgeBase(
  entries: KnowledgeEntry[],
  dK: number,
  path: string,
  format: OutputFormat
): void {
  if (entries.length === 0) {
    throw new Error("refusing to write an empty knowledge base");
  }
  for (const e of entries) {
    if (e.keyEmb.length !== dK) {
      throw new Error(`entry ${e.id}: key length ${e.keyEmb.length} != ${dK}`);
    }
    if (!e.keyEmb.some((v) => v !== 0.0)) {
      throw new Error(`entry ${e.id}: all-zero key`);
    }
  }
  if (format === "jsonl") {
    const lines = [JSON.stringify({ d_k: dK })];
    for (const e of entries) {
      lines.push(
        JSON.stringify({ id: e.id, key_emb: Array.from(e.keyEmb), payload: e.payload })
      );
    }
    fs.writeFileSync(path, lines.join("\n") + "\n");
    return;
  }
  const parts: Buffer[] = [];
  const header = Buffer.alloc(4 + 2 + 4 + 4);
  header.write("QFKB", 0, "ascii");
  header.writeUInt16LE(1, 4);
  header.writeUInt32LE(entries.length, 6);
  header.writeUInt32LE(dK, 10);
  parts.push(header);
  for (const e of entries) {
    const id = Buffer.from(e.id, "utf-8");
    const payload = Buffer.from(e.payload, "utf-8");
    const idLead = Buffer.alloc(4);
    idLead.writeUInt32LE(id.length, 0);
    const payloadLead = Buffer.alloc(4);
    payloadLead.writeUInt32LE(payload.length, 0);
    parts.push(idLead, id, payloadLead, payload, f32Bytes(e.keyEmb));
  }
  fs.writeFileSync(path, Buffer.concat(parts));
}

/** Minimal QFKB reader, used by tests to query back what was written. */
export function readKnowledgeBase(path: string): { dK: number; entries: KnowledgeEntry[] } {
  const buf = fs.readFileSync(path);
  if (buf.subarray(0, 4).toString("ascii") !== "QFKB") {
    throw new Error(`${path}: bad magic`);
  }
  const n = buf.readUInt32LE(6);
  const dK = buf.readUInt32LE(10);
  let pos = 14;
  const entries: KnowledgeEntry[] = [];
  for (let i = 0; i < n; i++) {
    const idLen = buf.readUInt32LE(pos);
    pos += 4;
    const id = buf.subarray(pos, pos + idLen).toString("utf-8");
    pos += idLen;
    const payloadLen = buf.readUInt32LE(pos);
    pos += 4;
    const payload = buf.subarray(pos, pos + payloadLen).toString("utf-8");
    pos += payloadLen;
    const key = new Float64Array(dK);
    for (let j = 0; j < dK; j++) {
      key[j] = buf.readFloatLE(pos);
      pos += 4;
    }
    entries.push({ id, keyEmb: key, payload });
  }
  return { dK, entries };
}
