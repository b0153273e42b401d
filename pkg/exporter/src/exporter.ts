/**
 * Export jobs: read an input file of texts or pairs, run the backend in
 * batches, write the interchange NDJSON plus manifest.
 *
 * Inputs:
 *  - texts NDJSON:  {"text_id": ..., "text": ...}
 *  - pairs NDJSON:  {"pair_id": ..., "text_a": ..., "text_b": ...}
 *  - evaluation datasets ({"id", "answer_a", "answer_b", ...}) are accepted
 *    directly: token/sentence modes emit text ids "<id>#a" / "<id>#b",
 *    pair mode emits both directions under pair_id = id.
 */
import { Backend } from "./backends.js";
import {
  Manifest,
  PairScoreRow,
  SentenceEmbeddingRow,
  TokenEmbeddingRow,
  readNdjson,
  writePairFile,
  writeSentenceFile,
  writeTokenFile,
} from "./interchange.js";

export interface ExportJob {
  mode: "token" | "sentence" | "pair";
  input: string;
  output: string;
  layer: number;
  batchSize: number;
}

interface TextEntry {
  textId: string;
  text: string;
}

interface PairEntry {
  pairId: string;
  direction: "ab" | "ba";
  textA: string;
  textB: string;
}

export function readTextEntries(path: string): TextEntry[] {
  const rows = readNdjson<Record<string, unknown>>(path);
  const entries: TextEntry[] = [];
  for (const row of rows) {
    if (typeof row.text === "string" && row.text_id !== undefined) {
      entries.push({ textId: String(row.text_id), text: row.text });
    } else if (typeof row.answer_a === "string" && typeof row.answer_b === "string") {
      entries.push({ textId: `${row.id}#a`, text: row.answer_a });
      entries.push({ textId: `${row.id}#b`, text: row.answer_b });
    } else {
      throw new Error(`row is neither a text entry nor a dataset record: ${JSON.stringify(row)}`);
    }
  }
  return entries;
}

export function readPairEntries(path: string): PairEntry[] {
  const rows = readNdjson<Record<string, unknown>>(path);
  const entries: PairEntry[] = [];
  for (const row of rows) {
    if (typeof row.text_a === "string" && typeof row.text_b === "string") {
      entries.push({
        pairId: String(row.pair_id),
        direction: "ab",
        textA: row.text_a,
        textB: row.text_b,
      });
    } else if (typeof row.answer_a === "string" && typeof row.answer_b === "string") {
      entries.push({ pairId: String(row.id), direction: "ab", textA: row.answer_a, textB: row.answer_b });
      entries.push({ pairId: String(row.id), direction: "ba", textA: row.answer_b, textB: row.answer_a });
    } else {
      throw new Error(`row is neither a pair entry nor a dataset record: ${JSON.stringify(row)}`);
    }
  }
  return entries;
}

function* batches<T>(items: T[], size: number): Generator<T[]> {
  for (let start = 0; start < items.length; start += size) {
    yield items.slice(start, start + size);
  }
}

export async function runExport(job: ExportJob, backend: Backend): Promise<Manifest> {
  if (job.batchSize < 1) throw new Error("batch size must be >= 1");
  await backend.ready();

  if (job.mode === "pair") {
    const entries = readPairEntries(job.input);
    const rows: PairScoreRow[] = [];
    for (const chunk of batches(entries, job.batchSize)) {
      const scores = await backend.scorePairs(chunk.map((e) => [e.textA, e.textB]));
      chunk.forEach((entry, i) => {
        rows.push({
          pair_id: entry.pairId,
          model: backend.modelId,
          direction: entry.direction,
          score: scores[i],
        });
      });
    }
    return writePairFile(job.output, rows);
  }

  const entries = readTextEntries(job.input);
  if (job.mode === "sentence") {
    const rows: SentenceEmbeddingRow[] = [];
    for (const chunk of batches(entries, job.batchSize)) {
      const vectors = await backend.embedSentences(chunk.map((e) => e.text));
      chunk.forEach((entry, i) => {
        rows.push({ text_id: entry.textId, model: backend.modelId, vector: vectors[i] });
      });
    }
    return writeSentenceFile(job.output, rows);
  }

  const rows: TokenEmbeddingRow[] = [];
  for (const chunk of batches(entries, job.batchSize)) {
    const embedded = await backend.embedTokens(chunk.map((e) => e.text), job.layer);
    chunk.forEach((entry, i) => {
      rows.push({
        text_id: entry.textId,
        model: backend.modelId,
        layer: job.layer,
        tokens: embedded[i].tokens,
        vectors: embedded[i].vectors,
      });
    });
  }
  return writeTokenFile(job.output, rows);
}
