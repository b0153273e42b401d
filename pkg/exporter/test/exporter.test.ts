import assert from "node:assert/strict";
import { mkdtempSync, readFileSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";
import { test } from "node:test";

import { HashBackend } from "../src/backends.js";
import { runExport, readTextEntries, readPairEntries } from "../src/exporter.js";
import { readNdjson, verifyFile, TokenEmbeddingRow, PairScoreRow } from "../src/interchange.js";

function tempDir(): string {
  return mkdtempSync(join(tmpdir(), "export-job-"));
}

function writeTexts(dir: string): string {
  const path = join(dir, "texts.ndjson");
  const rows = [
    { text_id: "t1", text: "northern river delta" },
    { text_id: "t2", text: "quiet harbor town" },
    { text_id: "t3", text: "eleven" },
  ];
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join("\n") + "\n", "utf-8");
  return path;
}

function writeDataset(dir: string): string {
  const path = join(dir, "answers.ndjson");
  const rows = [
    { id: "r1", answer_a: "eleven", answer_b: "11", label: 2, lang: "en" },
    { id: "r2", answer_a: "alpha beta", answer_b: "gamma beta", label: 1, lang: "en" },
  ];
  writeFileSync(path, rows.map((r) => JSON.stringify(r)).join("\n") + "\n", "utf-8");
  return path;
}

test("re-exporting the same input produces bit-identical files", async () => {
  const dir = tempDir();
  const input = writeTexts(dir);
  const backend = new HashBackend(8);
  const outA = join(dir, "a.ndjson");
  const outB = join(dir, "b.ndjson");
  await runExport({ mode: "token", input, output: outA, layer: 2, batchSize: 2 }, backend);
  await runExport({ mode: "token", input, output: outB, layer: 2, batchSize: 3 }, backend);
  assert.equal(readFileSync(outA, "utf-8"), readFileSync(outB, "utf-8"));
});

test("different layers give different token vectors", async () => {
  const dir = tempDir();
  const input = writeTexts(dir);
  const backend = new HashBackend(8);
  const out2 = join(dir, "l2.ndjson");
  const out12 = join(dir, "l12.ndjson");
  await runExport({ mode: "token", input, output: out2, layer: 2, batchSize: 8 }, backend);
  await runExport({ mode: "token", input, output: out12, layer: 12, batchSize: 8 }, backend);
  const rows2 = readNdjson<TokenEmbeddingRow>(out2);
  const rows12 = readNdjson<TokenEmbeddingRow>(out12);
  assert.deepEqual(rows2[0].tokens, rows12[0].tokens);
  assert.notDeepEqual(rows2[0].vectors, rows12[0].vectors);
});

test("sentence export writes a verifiable interchange file", async () => {
  const dir = tempDir();
  const input = writeTexts(dir);
  const out = join(dir, "sent.ndjson");
  const manifest = await runExport(
    { mode: "sentence", input, output: out, layer: 0, batchSize: 2 },
    new HashBackend(16),
  );
  assert.equal(manifest.kind, "sentence");
  assert.equal(manifest.dimension, 16);
  assert.equal(manifest.record_count, 3);
  verifyFile(out);
});

test("exported dimension equals the backend's hidden size", async () => {
  const dir = tempDir();
  const input = writeTexts(dir);
  for (const dim of [8, 24]) {
    const backend = new HashBackend(dim);
    const out = join(dir, `sent-${dim}.ndjson`);
    const manifest = await runExport(
      { mode: "sentence", input, output: out, layer: 0, batchSize: 4 },
      backend,
    );
    assert.equal(manifest.dimension, backend.dimension());
    const rows = readNdjson<{ vector: number[] }>(out);
    for (const row of rows) assert.equal(row.vector.length, dim);
  }
});

test("dataset input expands to per-side text ids", async () => {
  const dir = tempDir();
  const input = writeDataset(dir);
  const out = join(dir, "tok.ndjson");
  await runExport({ mode: "token", input, output: out, layer: 2, batchSize: 8 }, new HashBackend(8));
  const ids = readNdjson<TokenEmbeddingRow>(out).map((r) => r.text_id);
  assert.deepEqual(ids, ["r1#a", "r1#b", "r2#a", "r2#b"]);
});

test("dataset input in pair mode scores both directions", async () => {
  const dir = tempDir();
  const input = writeDataset(dir);
  const out = join(dir, "pairs.ndjson");
  await runExport({ mode: "pair", input, output: out, layer: 0, batchSize: 8 }, new HashBackend(8));
  const rows = readNdjson<PairScoreRow>(out);
  assert.equal(rows.length, 4);
  const r1 = rows.filter((r) => r.pair_id === "r1");
  assert.deepEqual(r1.map((r) => r.direction), ["ab", "ba"]);
  assert.notEqual(r1[0].score, r1[1].score); // direction-sensitive scorer
  for (const row of rows) {
    assert.ok(row.score >= 0 && row.score <= 1);
  }
});

test("unrecognized rows are rejected with a clear error", () => {
  const dir = tempDir();
  const path = join(dir, "junk.ndjson");
  writeFileSync(path, JSON.stringify({ unexpected: true }) + "\n", "utf-8");
  assert.throws(() => readTextEntries(path), /neither/);
  assert.throws(() => readPairEntries(path), /neither/);
});
