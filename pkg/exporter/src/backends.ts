/**
 * Inference backends behind one interface.
 *
 * - HashBackend: deterministic pseudo-embeddings derived from sha256 of the
 *   content; no model download, used by the test suite and for plumbing
 *   checks. Different layers yield different vectors; pair scores land in
 *   [0, 1] and are direction-sensitive.
 * - TransformersBackend: real models via @huggingface/transformers
 *   (optional dependency, loaded dynamically). ONNX exports expose the final
 *   hidden layer only, so token mode accepts layer = -1 (last) or the
 *   model's top layer index.
 */
import { createHash } from "node:crypto";

export interface TokenEmbedding {
  tokens: string[];
  vectors: number[][];
}

export interface Backend {
  readonly modelId: string;
  ready(): Promise<void>;
  embedTokens(texts: string[], layer: number): Promise<TokenEmbedding[]>;
  embedSentences(texts: string[]): Promise<number[][]>;
  scorePairs(pairs: [string, string][]): Promise<number[]>;
  dimension(): number;
}

export class LayerOutOfRange extends Error {}

function digestBytes(key: string, count: number): number[] {
  const out: number[] = [];
  let counter = 0;
  while (out.length < count) {
    const block = createHash("sha256").update(`${key}${counter}`, "utf-8").digest();
    out.push(...block);
    counter += 1;
  }
  return out.slice(0, count);
}

export class HashBackend implements Backend {
  readonly modelId: string;
  private readonly dim: number;

  constructor(dim = 16) {
    if (dim < 1) throw new Error("dimension must be >= 1");
    this.dim = dim;
    this.modelId = `hash-${dim}d`;
  }

  async ready(): Promise<void> {}

  dimension(): number {
    return this.dim;
  }

  private vector(key: string): number[] {
    const bytes = digestBytes(key, this.dim);
    const vec = bytes.map((b) => Math.fround((b - 127.5) / 127.5));
    const allZero: boolean = vec.every((v) => v === 0);
    if (allZero) vec[0] = 1;
    return vec;
  }

  async embedTokens(texts: string[], layer: number): Promise<TokenEmbedding[]> {
    if (layer < 0) throw new LayerOutOfRange(`layer must be >= 0, got ${layer}`);
    return texts.map((text) => {
      const tokens = text.toLowerCase().split(/\s+/).filter((t) => t.length > 0);
      if (tokens.length === 0) tokens.push("");
      const vectors = tokens.map((tok, i) =>
        this.vector(`tok|${this.modelId}|${layer}|${tok}|${i}`),
      );
      return { tokens, vectors };
    });
  }

  async embedSentences(texts: string[]): Promise<number[][]> {
    return texts.map((text) => this.vector(`sent|${this.modelId}|${text}`));
  }

  async scorePairs(pairs: [string, string][]): Promise<number[]> {
    return pairs.map(([a, b]) => {
      const bytes = digestBytes(`pair|${this.modelId}|${a}${b}`, 4);
      const value =
        ((bytes[0] * 256 + bytes[1]) * 256 + bytes[2]) * 256 + bytes[3];
      return (value % 1_000_000) / 1_000_000;
    });
  }
}

interface TransformersModule {
  AutoTokenizer: { from_pretrained(model: string): Promise<any> };
  AutoModel: { from_pretrained(model: string, options?: object): Promise<any> };
  AutoModelForSequenceClassification: {
    from_pretrained(model: string, options?: object): Promise<any>;
  };
  pipeline(task: string, model: string, options?: object): Promise<any>;
}

export class TransformersBackend implements Backend {
  readonly modelId: string;
  private readonly mode: "token" | "sentence" | "pair";
  private loading: Promise<void> | null = null;
  private extractor: any = null;
  private tokenizer: any = null;
  private model: any = null;
  private dim = 0;
  private numLayers = 0;

  constructor(modelId: string, mode: "token" | "sentence" | "pair") {
    this.modelId = modelId;
    this.mode = mode;
  }

  private async importTransformers(): Promise<TransformersModule> {
    try {
      return (await import("@huggingface/transformers")) as unknown as TransformersModule;
    } catch (err) {
      throw new Error(
        "@huggingface/transformers is not installed; run `npm install @huggingface/transformers` " +
          "to use real models, or use --backend hash",
      );
    }
  }

  ready(): Promise<void> {
    if (!this.loading) this.loading = this.load();
    return this.loading;
  }

  private async load(): Promise<void> {
    const transformers = await this.importTransformers();
    if (this.mode === "sentence") {
      this.extractor = await transformers.pipeline("feature-extraction", this.modelId);
      this.dim = this.extractor.model.config.hidden_size;
    } else if (this.mode === "token") {
      this.tokenizer = await transformers.AutoTokenizer.from_pretrained(this.modelId);
      this.model = await transformers.AutoModel.from_pretrained(this.modelId);
      this.dim = this.model.config.hidden_size;
      this.numLayers = this.model.config.num_hidden_layers;
    } else {
      this.tokenizer = await transformers.AutoTokenizer.from_pretrained(this.modelId);
      this.model = await transformers.AutoModelForSequenceClassification.from_pretrained(
        this.modelId,
      );
      this.dim = this.model.config.hidden_size;
    }
  }

  dimension(): number {
    return this.dim;
  }

  async embedTokens(texts: string[], layer: number): Promise<TokenEmbedding[]> {
    await this.ready();
    // ONNX exports surface only the final hidden state
    if (layer !== -1 && layer !== this.numLayers) {
      throw new LayerOutOfRange(
        `this backend can extract layer ${this.numLayers} (the last) only; ` +
          `re-export the model with hidden-state outputs for other layers`,
      );
    }
    const results: TokenEmbedding[] = [];
    for (const text of texts) {
      const encoded = await this.tokenizer(text, { return_tensor: true });
      const output = await this.model(encoded);
      const hidden = output.last_hidden_state;
      const [, seqLen, dim] = hidden.dims;
      const data: Float32Array = hidden.data;
      const ids = Array.from(encoded.input_ids.data as BigInt64Array, (v) => Number(v));
      const tokens: string[] = ids.map((id: number) =>
        this.tokenizer.decode([id], { skip_special_tokens: false }),
      );
      const vectors: number[][] = [];
      for (let t = 0; t < seqLen; t++) {
        vectors.push(Array.from(data.slice(t * dim, (t + 1) * dim)));
      }
      results.push({ tokens, vectors });
    }
    return results;
  }

  async embedSentences(texts: string[]): Promise<number[][]> {
    await this.ready();
    const results: number[][] = [];
    for (const text of texts) {
      const output = await this.extractor(text, { pooling: "mean", normalize: true });
      results.push(Array.from(output.data as Float32Array));
    }
    return results;
  }

  async scorePairs(pairs: [string, string][]): Promise<number[]> {
    await this.ready();
    const scores: number[] = [];
    for (const [a, b] of pairs) {
      const encoded = await this.tokenizer(a, { text_pair: b, return_tensor: true });
      const output = await this.model(encoded);
      const logits: Float32Array = output.logits.data;
      scores.push(logits.length === 1 ? logits[0] : sigmoid(logits[0]));
    }
    return scores;
  }
}

function sigmoid(x: number): number {
  return 1 / (1 + Math.exp(-x));
}

export function makeBackend(
  backend: string,
  modelId: string,
  mode: "token" | "sentence" | "pair",
  dim: number,
): Backend {
  if (backend === "hash") return new HashBackend(dim);
  if (backend === "transformers") return new TransformersBackend(modelId, mode);
  throw new Error(`unknown backend ${backend}; expected hash or transformers`);
}
