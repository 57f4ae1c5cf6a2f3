/**
 * Top-level extraction flows: manifest in, embedding-set file out. Output is
 * canonicalized by id before writing, so batch order never leaks into bytes.
 */

import fs from "node:fs";
import path from "node:path";

import { serialize, type EmbeddingRecord } from "./formats.js";
import { parseImageManifest, parsePromptManifest } from "./manifest.js";
import { finalizeVector, getEncoder, type EncoderSpec } from "./stub.js";

export type OutputFormat = "jsonl" | "binary";

/** Embed every image named by the manifest; paths resolve relative to it. */
export function extract(
  manifestPath: string,
  spec: EncoderSpec,
  outPath: string,
  format: OutputFormat = "jsonl",
): EmbeddingRecord[] {
  const adapter = getEncoder(spec.name);
  const rows = parseImageManifest(fs.readFileSync(manifestPath, "utf-8"));
  const baseDir = path.dirname(manifestPath);
  const records: EmbeddingRecord[] = rows.map((row) => {
    const imagePath = path.resolve(baseDir, row.path);
    try {
      fs.accessSync(imagePath, fs.constants.R_OK);
    } catch {
      throw new Error(`record '${row.id}': cannot read image '${imagePath}'`);
    }
    const raw = adapter.embedImage(imagePath, row.id, spec);
    return {
      id: row.id,
      subject: row.subject,
      role: row.role,
      encoder: spec.name,
      variant: row.variant,
      method: row.method,
      vector: finalizeVector(raw, spec, `record '${row.id}'`),
    };
  });
  return write(records, outPath, format);
}

/** Embed prompt strings as role=prompt records keyed to their subjects. */
export function embedText(
  promptsPath: string,
  spec: EncoderSpec,
  outPath: string,
  format: OutputFormat = "jsonl",
): EmbeddingRecord[] {
  const adapter = getEncoder(spec.name);
  if (!adapter.embedText) {
    throw new Error(`encoder '${spec.name}' cannot embed text`);
  }
  const rows = parsePromptManifest(fs.readFileSync(promptsPath, "utf-8"));
  const records: EmbeddingRecord[] = rows.map((row) => ({
    id: row.id,
    subject: row.subject,
    role: "prompt" as const,
    encoder: spec.name,
    variant: "",
    method: "",
    vector: finalizeVector(adapter.embedText!(row.text, spec), spec, `prompt '${row.id}'`),
  }));
  return write(records, outPath, format);
}

function write(records: EmbeddingRecord[], outPath: string, format: OutputFormat): EmbeddingRecord[] {
  const payload = serialize(records, format);
  fs.mkdirSync(path.dirname(path.resolve(outPath)), { recursive: true });
  const tmp = outPath + ".tmp";
  fs.writeFileSync(tmp, payload);
  fs.renameSync(tmp, outPath);
  return records;
}
