/**
 * CSV manifests naming what to embed. Image manifests list files with their
 * identity labels; prompt manifests list prompt strings with a pairing key
 * (the subject) so the engine can match prompts to generated images.
 */

import Papa from "papaparse";

const IMAGE_HEADER = ["path", "id", "subject", "role", "method", "variant"] as const;
const PROMPT_HEADER = ["text", "id", "subject"] as const;

const IMAGE_ROLES = new Set(["reference", "gallery", "generated"]);

export interface ImageRow {
  path: string;
  id: string;
  subject: string;
  role: "reference" | "gallery" | "generated";
  method: string;
  variant: string;
}

export interface PromptRow {
  text: string;
  id: string;
  subject: string;
}

function parseRows(csvText: string, expected: readonly string[], what: string): Record<string, string>[] {
  const parsed = Papa.parse<Record<string, string>>(csvText, {
    header: true,
    skipEmptyLines: true,
  });
  if (parsed.errors.length > 0) {
    const first = parsed.errors[0]!;
    throw new Error(`${what} manifest: ${first.message} (row ${first.row ?? "?"})`);
  }
  const header = parsed.meta.fields ?? [];
  if (header.length !== expected.length || expected.some((h, i) => header[i] !== h)) {
    throw new Error(
      `${what} manifest: header must be exactly '${expected.join(",")}', got '${header.join(",")}'`,
    );
  }
  if (parsed.data.length === 0) {
    throw new Error(`${what} manifest: no data rows`);
  }
  return parsed.data;
}

function requireUniqueIds(rows: { id: string }[], what: string): void {
  const seen = new Set<string>();
  for (const row of rows) {
    if (seen.has(row.id)) {
      throw new Error(`${what} manifest: duplicate id '${row.id}'`);
    }
    seen.add(row.id);
  }
}

export function parseImageManifest(csvText: string): ImageRow[] {
  const rows = parseRows(csvText, IMAGE_HEADER, "image").map((row, i) => {
    const line = i + 2; // header occupies line 1
    if (!row.path) throw new Error(`image manifest line ${line}: empty path`);
    if (!row.id) throw new Error(`image manifest line ${line}: empty id`);
    if (!row.subject) throw new Error(`image manifest line ${line}: empty subject`);
    if (!IMAGE_ROLES.has(row.role ?? "")) {
      throw new Error(`image manifest line ${line}: unknown role '${row.role}'`);
    }
    return {
      path: row.path!,
      id: row.id!,
      subject: row.subject!,
      role: row.role as ImageRow["role"],
      method: row.method ?? "",
      variant: row.variant ?? "",
    };
  });
  requireUniqueIds(rows, "image");
  return rows;
}

export function parsePromptManifest(csvText: string): PromptRow[] {
  const rows = parseRows(csvText, PROMPT_HEADER, "prompt").map((row, i) => {
    const line = i + 2;
    if (!row.text) throw new Error(`prompt manifest line ${line}: empty prompt text`);
    if (!row.id) throw new Error(`prompt manifest line ${line}: empty id`);
    if (!row.subject) throw new Error(`prompt manifest line ${line}: empty subject`);
    return { text: row.text!, id: row.id!, subject: row.subject! };
  });
  requireUniqueIds(rows, "prompt");
  return rows;
}
