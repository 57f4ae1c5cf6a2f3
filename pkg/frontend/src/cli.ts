/**
 * Command-line entry: `extract` embeds an image manifest, `embed-text` embeds
 * a prompt manifest. Exit codes: 0 ok, 1 data error, 2 usage error.
 */

import { parseArgs } from "node:util";

import { embedText, extract, type OutputFormat } from "./extract.js";
import { defaultSpec } from "./stub.js";

const USAGE = `usage:
  extract    --manifest images.csv  --out out.jsonl [--encoder stub] [--dim 16] [--format jsonl|binary] [--raw]
  embed-text --manifest prompts.csv --out out.jsonl [--encoder stub] [--dim 16] [--format jsonl|binary] [--raw]`;

export function main(argv: string[]): number {
  let parsed;
  try {
    parsed = parseArgs({
      args: argv,
      allowPositionals: true,
      options: {
        manifest: { type: "string" },
        out: { type: "string" },
        encoder: { type: "string", default: "stub" },
        dim: { type: "string", default: "16" },
        format: { type: "string", default: "jsonl" },
        raw: { type: "boolean", default: false },
      },
    });
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}\n${USAGE}`);
    return 2;
  }
  const [command] = parsed.positionals;
  const { manifest, out, encoder, dim, format, raw } = parsed.values;
  if ((command !== "extract" && command !== "embed-text") || !manifest || !out) {
    console.error(USAGE);
    return 2;
  }
  const dimension = Number(dim);
  if (!Number.isInteger(dimension) || dimension < 1) {
    console.error(`error: --dim must be a positive integer, got '${dim}'`);
    return 2;
  }
  if (format !== "jsonl" && format !== "binary") {
    console.error(`error: --format must be jsonl or binary, got '${format}'`);
    return 2;
  }
  const spec = { ...defaultSpec(encoder!, dimension), normalize: !raw };
  try {
    const run = command === "extract" ? extract : embedText;
    const records = run(manifest, spec, out, format as OutputFormat);
    console.log(`wrote ${records.length} records to ${out} (encoder=${spec.name}, dim=${dimension})`);
    return 0;
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
}

const invokedDirectly =
  process.argv[1] !== undefined && import.meta.url === new URL(`file://${process.argv[1]}`).href;
if (invokedDirectly) {
  process.exit(main(process.argv.slice(2)));
}
