/**
 * Writers for the embedding-set file formats consumed by the evaluation
 * engine: JSONL (one compact object per record) and the FPRK binary layout.
 * Field order and binary framing must match the engine's reader exactly.
 */

export type Role = "reference" | "gallery" | "generated" | "prompt";

export const ROLES: readonly Role[] = ["reference", "gallery", "generated", "prompt"];

const ROLE_CODES: Record<Role, number> = { reference: 0, gallery: 1, generated: 2, prompt: 3 };

export interface EmbeddingRecord {
  id: string;
  subject: string;
  role: Role;
  encoder: string;
  variant: string;
  method: string;
  vector: Float32Array;
}

const MAGIC = "FPRK";
const FORMAT_VERSION = 1;

/** Sort records by id (code points); writers expect canonical order. */
export function canonicalize(records: EmbeddingRecord[]): EmbeddingRecord[] {
  // localeCompare would be locale-dependent; compare raw strings instead.
  // Fixture ids stay within the BMP, where UTF-16 order equals code-point order.
  const sorted = [...records].sort((a, b) => (a.id < b.id ? -1 : a.id > b.id ? 1 : 0));
  for (let i = 1; i < sorted.length; i++) {
    if (sorted[i]!.id === sorted[i - 1]!.id) {
      throw new Error(`record '${sorted[i]!.id}': duplicate id`);
    }
  }
  return sorted;
}

export function toJsonl(records: EmbeddingRecord[]): string {
  const lines = records.map((rec) =>
    JSON.stringify({
      id: rec.id,
      subject: rec.subject,
      role: rec.role,
      encoder: rec.encoder,
      variant: rec.variant,
      method: rec.method,
      vector: [...rec.vector],
    }),
  );
  return lines.map((line) => line + "\n").join("");
}

function utf8WithLength(text: string): Buffer {
  const raw = Buffer.from(text, "utf-8");
  if (raw.length > 0xffff) {
    throw new Error(`string field exceeds 65535 UTF-8 bytes: '${text.slice(0, 40)}…'`);
  }
  const out = Buffer.alloc(2 + raw.length);
  out.writeUInt16LE(raw.length, 0);
  raw.copy(out, 2);
  return out;
}

export function toBinary(records: EmbeddingRecord[]): Buffer {
  if (records.length === 0) {
    throw new Error("refusing to write an empty embedding set");
  }
  const dimension = records[0]!.vector.length;
  const header = Buffer.alloc(18);
  header.write(MAGIC, 0, "ascii");
  header.writeUInt16LE(FORMAT_VERSION, 4);
  header.writeUInt32LE(dimension, 6);
  header.writeBigUInt64LE(BigInt(records.length), 10);

  const chunks: Buffer[] = [header];
  for (const rec of records) {
    if (rec.vector.length !== dimension) {
      throw new Error(`record '${rec.id}': dimension ${rec.vector.length} != ${dimension}`);
    }
    chunks.push(utf8WithLength(rec.id));
    chunks.push(utf8WithLength(rec.subject));
    chunks.push(Buffer.from([ROLE_CODES[rec.role]]));
    chunks.push(utf8WithLength(rec.encoder));
    chunks.push(utf8WithLength(rec.variant));
    chunks.push(utf8WithLength(rec.method));
    const vec = Buffer.alloc(4 * dimension);
    for (let i = 0; i < dimension; i++) {
      vec.writeFloatLE(rec.vector[i]!, 4 * i);
    }
    chunks.push(vec);
  }
  return Buffer.concat(chunks);
}

export function serialize(records: EmbeddingRecord[], format: "jsonl" | "binary"): Buffer {
  const ordered = canonicalize(records);
  return format === "jsonl" ? Buffer.from(toJsonl(ordered), "utf-8") : toBinary(ordered);
}
