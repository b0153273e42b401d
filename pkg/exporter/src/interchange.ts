/**
 * NDJSON interchange files plus sha256 manifests, matching the evaluation
 * toolkit's provider formats. Vector components are 32-bit floats rendered
 * as decimal text.
 */
import { createHash } from "node:crypto";
import { readFileSync, writeFileSync } from "node:fs";

export interface TokenEmbeddingRow {
  text_id: string;
  model: string;
  layer: number;
  tokens: string[];
  vectors: number[][];
}

export interface SentenceEmbeddingRow {
  text_id: string;
  model: string;
  vector: number[];
}

export interface PairScoreRow {
  pair_id: string;
  model: string;
  direction: "ab" | "ba";
  score: number;
}

export interface Manifest {
  model: string;
  kind: "token" | "sentence" | "pair";
  layer?: number;
  dimension: number;
  record_count: number;
  sha256: string;
}

export const MANIFEST_SUFFIX = ".manifest.json";

/** Nearest float32 value, so the decimal rendering is a float32 rendering. */
export function toFloat32(values: number[]): number[] {
  return values.map((v) => Math.fround(v));
}

function sha256Hex(data: string): string {
  return createHash("sha256").update(data, "utf-8").digest("hex");
}

function writeNdjson(path: string, rows: object[]): string {
  const body = rows.map((row) => JSON.stringify(row)).join("\n") + "\n";
  writeFileSync(path, body, "utf-8");
  return sha256Hex(body);
}

function writeManifest(dataPath: string, manifest: Manifest): void {
  writeFileSync(dataPath + MANIFEST_SUFFIX, JSON.stringify(manifest) + "\n", "utf-8");
}

export function writeTokenFile(path: string, rows: TokenEmbeddingRow[]): Manifest {
  if (rows.length === 0) throw new Error("refusing to write an empty token embedding file");
  const dimension = rows[0].vectors[0].length;
  for (const row of rows) {
    if (row.tokens.length !== row.vectors.length) {
      throw new Error(`token/vector count mismatch for ${row.text_id}`);
    }
    for (const vec of row.vectors) {
      if (vec.length !== dimension) {
        throw new Error(`inconsistent dimension in ${row.text_id}`);
      }
    }
    row.vectors = row.vectors.map(toFloat32);
  }
  const digest = writeNdjson(path, rows);
  const manifest: Manifest = {
    model: rows[0].model,
    kind: "token",
    layer: rows[0].layer,
    dimension,
    record_count: rows.length,
    sha256: digest,
  };
  writeManifest(path, manifest);
  return manifest;
}

export function writeSentenceFile(path: string, rows: SentenceEmbeddingRow[]): Manifest {
  if (rows.length === 0) throw new Error("refusing to write an empty sentence embedding file");
  const dimension = rows[0].vector.length;
  for (const row of rows) {
    if (row.vector.length !== dimension) {
      throw new Error(`inconsistent dimension in ${row.text_id}`);
    }
    row.vector = toFloat32(row.vector);
  }
  const digest = writeNdjson(path, rows);
  const manifest: Manifest = {
    model: rows[0].model,
    kind: "sentence",
    dimension,
    record_count: rows.length,
    sha256: digest,
  };
  writeManifest(path, manifest);
  return manifest;
}

export function writePairFile(path: string, rows: PairScoreRow[]): Manifest {
  if (rows.length === 0) throw new Error("refusing to write an empty pair-score file");
  const digest = writeNdjson(path, rows);
  const manifest: Manifest = {
    model: rows[0].model,
    kind: "pair",
    dimension: 0,
    record_count: rows.length,
    sha256: digest,
  };
  writeManifest(path, manifest);
  return manifest;
}

export function readManifest(dataPath: string): Manifest {
  return JSON.parse(readFileSync(dataPath + MANIFEST_SUFFIX, "utf-8")) as Manifest;
}

export function verifyFile(dataPath: string): Manifest {
  const manifest = readManifest(dataPath);
  const digest = sha256Hex(readFileSync(dataPath, "utf-8"));
  if (digest !== manifest.sha256) {
    throw new Error(`${dataPath}: sha256 ${digest} does not match manifest`);
  }
  return manifest;
}

export function readNdjson<T>(path: string): T[] {
  return readFileSync(path, "utf-8")
    .split("\n")
    .filter((line) => line.trim().length > 0)
    .map((line) => JSON.parse(line) as T);
}
