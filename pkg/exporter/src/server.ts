/**
 * HTTP provider API:
 *   POST /embed        {"texts": [...], "mode": "token"|"sentence", "layer": n}
 *                      -> {"model", "dimension", "embeddings": [...]}
 *   POST /score-pairs  {"pairs": [[a, b], ...]} -> {"model", "scores": [...]}
 *   GET  /healthz      200 once the backend is loaded, 503 while loading
 *
 * 400 on malformed bodies, 413 when a batch exceeds the cap; all errors are
 * {"error": ...} with a non-2xx status.
 */
import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";

import { Backend, LayerOutOfRange } from "./backends.js";

export interface ServerOptions {
  maxBatch: number;
  maxBodyBytes: number;
}

const DEFAULTS: ServerOptions = { maxBatch: 64, maxBodyBytes: 8 * 1024 * 1024 };

function send(res: ServerResponse, status: number, payload: object): void {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
}

function readBody(req: IncomingMessage, limit: number): Promise<string> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > limit) {
        reject(new Error("body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks).toString("utf-8")));
    req.on("error", reject);
  });
}

export function createProviderServer(
  backend: Backend,
  options: Partial<ServerOptions> = {},
): Server {
  const config = { ...DEFAULTS, ...options };
  let loaded = false;
  const loading = backend.ready().then(() => {
    loaded = true;
  });
  loading.catch(() => {});

  return createServer(async (req, res) => {
    try {
      if (req.method === "GET" && req.url === "/healthz") {
        if (!loaded) {
          send(res, 503, { error: "model loading" });
          return;
        }
        send(res, 200, { status: "ok", model: backend.modelId });
        return;
      }
      if (req.method !== "POST") {
        send(res, 404, { error: `no route ${req.method} ${req.url}` });
        return;
      }
      await loading;
      loaded = true;

      let payload: any;
      try {
        payload = JSON.parse((await readBody(req, config.maxBodyBytes)) || "null");
      } catch (err) {
        send(res, (err as Error).message === "body too large" ? 413 : 400, {
          error: (err as Error).message,
        });
        return;
      }
      if (typeof payload !== "object" || payload === null) {
        send(res, 400, { error: "expected a JSON object body" });
        return;
      }

      if (req.url === "/embed") {
        const texts = payload.texts;
        const mode = payload.mode;
        if (!Array.isArray(texts) || texts.length === 0 || !texts.every((t: unknown) => typeof t === "string")) {
          send(res, 400, { error: "texts must be a non-empty list of strings" });
          return;
        }
        if (mode !== "token" && mode !== "sentence") {
          send(res, 400, { error: "mode must be token or sentence" });
          return;
        }
        if (texts.length > config.maxBatch) {
          send(res, 413, { error: `batch of ${texts.length} exceeds cap ${config.maxBatch}` });
          return;
        }
        if (mode === "sentence") {
          const vectors = await backend.embedSentences(texts);
          send(res, 200, {
            model: backend.modelId,
            dimension: backend.dimension(),
            embeddings: vectors,
          });
          return;
        }
        const layer = Number.isInteger(payload.layer) ? payload.layer : 0;
        const embedded = await backend.embedTokens(texts, layer);
        send(res, 200, {
          model: backend.modelId,
          dimension: backend.dimension(),
          embeddings: embedded.map((e) => ({ tokens: e.tokens, vectors: e.vectors })),
        });
        return;
      }

      if (req.url === "/score-pairs") {
        const pairs = payload.pairs;
        if (
          !Array.isArray(pairs) ||
          pairs.length === 0 ||
          !pairs.every(
            (p: unknown) =>
              Array.isArray(p) && p.length === 2 && p.every((t) => typeof t === "string"),
          )
        ) {
          send(res, 400, { error: "pairs must be a non-empty list of [a, b] string pairs" });
          return;
        }
        if (pairs.length > config.maxBatch) {
          send(res, 413, { error: `batch of ${pairs.length} exceeds cap ${config.maxBatch}` });
          return;
        }
        const scores = await backend.scorePairs(pairs as [string, string][]);
        send(res, 200, { model: backend.modelId, scores });
        return;
      }

      send(res, 404, { error: `no route ${req.method} ${req.url}` });
    } catch (err) {
      if (err instanceof LayerOutOfRange) {
        send(res, 400, { error: err.message });
        return;
      }
      send(res, 500, { error: (err as Error).message });
    }
  });
}
