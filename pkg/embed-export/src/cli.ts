#!/usr/bin/env node
/**
 * embed-export: encode an image+question corpus (CSV manifest of
 * id,image_path,question,answer) into dataset / knowledge files consumable
 * by the freqrag pipeline.
 */

import yargs from "yargs";
import { hideBin } from "yargs/helpers";

import { exportDataset, exportKnowledge } from "./export";
import { IMAGE_ENCODER_NAME } from "./imageEncoder";
import { TEXT_ENCODER_NAME } from "./textEncoder";
import { OutputFormat } from "./types";

interface CommonArgs {
  manifest: string;
  out: string;
  format: string;
  device: string;
  textEncoder: string;
  imageEncoder: string;
}

function checkEncoders(args: CommonArgs): void {
  if (args.device !== "cpu") {
    throw new Error(`only --device cpu is supported by the offline encoders`);
  }
  if (args.textEncoder !== TEXT_ENCODER_NAME) {
    throw new Error(
      `unknown text encoder "${args.textEncoder}" (available: ${TEXT_ENCODER_NAME})`
    );
  }
  if (args.imageEncoder !== IMAGE_ENCODER_NAME) {
    throw new Error(
      `unknown image encoder "${args.imageEncoder}" (available: ${IMAGE_ENCODER_NAME})`
    );
  }
}

const commonOptions = {
  manifest: {
    type: "string" as const,
    demandOption: true,
    describe: "corpus CSV: id,image_path,question,answer",
  },
  out: { type: "string" as const, demandOption: true, describe: "output file path" },
  format: {
    choices: ["binary", "jsonl"] as const,
    default: "binary" as const,
    describe: "output serialization",
  },
  device: { type: "string" as const, default: "cpu" },
  "text-encoder": { type: "string" as const, default: TEXT_ENCODER_NAME },
  "image-encoder": { type: "string" as const, default: IMAGE_ENCODER_NAME },
};

export function run(argv: string[]): Promise<number> {
  return new Promise((resolve) => {
    const guarded = (body: (args: CommonArgs) => void) => (args: unknown) => {
      try {
        body(args as CommonArgs);
        resolve(0);
      } catch (err) {
        console.error(`embed-export: ${(err as Error).message}`);
        resolve(2);
      }
    };
    yargs(argv)
      .scriptName("embed-export")
      .command(
        "dataset",
        "encode yes/no rows into a QFSE/JSONL dataset",
        commonOptions,
        guarded((args) => {
          checkEncoders(args);
          const stats = exportDataset(args.manifest, args.out, args.format as OutputFormat);
          console.log(`wrote ${stats.written} samples to ${args.out}`);
          if (stats.skippedUnmapped > 0) {
            console.error(
              `warning: skipped ${stats.skippedUnmapped} rows with open-ended answers`
            );
          }
        })
      )
      .command(
        "knowledge",
        "encode all QA rows into a QFKB/JSONL knowledge base",
        commonOptions,
        guarded((args) => {
          checkEncoders(args);
          const stats = exportKnowledge(args.manifest, args.out, args.format as OutputFormat);
          console.log(`wrote ${stats.written} entries to ${args.out}`);
        })
      )
      .demandCommand(1, "choose a command: dataset or knowledge")
      .strict()
      .fail((msg, err) => {
        console.error(`embed-export: ${err ? err.message : msg}`);
        resolve(err ? 2 : 1);
      })
      .parse();
  });
}

if (require.main === module) {
  run(hideBin(process.argv)).then((code) => {
    process.exitCode = code;
  });
}
