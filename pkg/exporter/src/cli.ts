#!/usr/bin/env node
/**
 * answersim-exporter export --mode token --layer 2 --in texts.ndjson --out tokens.ndjson
 *                            [--model <id>] [--backend hash|transformers] [--batch 32] [--dim 16]
 * answersim-exporter serve  --port 8080 [--model <id>] [--mode sentence]
 *                            [--backend hash|transformers] [--max-batch 64]
 */
import { makeBackend } from "./backends.js";
import { runExport } from "./exporter.js";
import { createProviderServer } from "./server.js";

function parseFlags(argv: string[]): Map<string, string> {
  const flags = new Map<string, string>();
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (!arg.startsWith("--")) throw new Error(`unexpected argument ${arg}`);
    const value = argv[i + 1];
    if (value === undefined || value.startsWith("--")) {
      throw new Error(`flag ${arg} needs a value`);
    }
    flags.set(arg.slice(2), value);
    i += 1;
  }
  return flags;
}

function usage(): void {
  console.error(
    [
      "usage:",
      "  answersim-exporter export --mode token|sentence|pair --in FILE --out FILE",
      "      [--layer N] [--model ID] [--backend hash|transformers] [--batch N] [--dim N]",
      "  answersim-exporter serve --port N --mode token|sentence|pair",
      "      [--model ID] [--backend hash|transformers] [--max-batch N] [--dim N]",
    ].join("\n"),
  );
}

async function main(): Promise<number> {
  const [command, ...rest] = process.argv.slice(2);
  if (command !== "export" && command !== "serve") {
    usage();
    return 1;
  }
  let flags: Map<string, string>;
  try {
    flags = parseFlags(rest);
  } catch (err) {
    console.error(String((err as Error).message));
    usage();
    return 1;
  }

  const mode = (flags.get("mode") ?? "sentence") as "token" | "sentence" | "pair";
  if (!["token", "sentence", "pair"].includes(mode)) {
    console.error(`bad --mode ${mode}`);
    return 1;
  }
  const backendName = flags.get("backend") ?? (flags.has("model") ? "transformers" : "hash");
  const dim = Number(flags.get("dim") ?? "16");
  const backend = makeBackend(backendName, flags.get("model") ?? "", mode, dim);

  if (command === "export") {
    const input = flags.get("in");
    const output = flags.get("out");
    if (!input || !output) {
      usage();
      return 1;
    }
    const manifest = await runExport(
      {
        mode,
        input,
        output,
        layer: Number(flags.get("layer") ?? "0"),
        batchSize: Number(flags.get("batch") ?? "32"),
      },
      backend,
    );
    console.log(JSON.stringify(manifest));
    return 0;
  }

  const port = Number(flags.get("port") ?? "8080");
  const server = createProviderServer(backend, {
    maxBatch: Number(flags.get("max-batch") ?? "64"),
  });
  await new Promise<void>((resolve) => server.listen(port, resolve));
  console.log(
    JSON.stringify({ listening: port, model: backend.modelId || backendName, mode }),
  );
  await new Promise(() => {});
  return 0;
}

main().then(
  (code) => {
    if (code !== 0) process.exit(code);
  },
  (err) => {
    console.error(String(err?.message ?? err));
    process.exit(1);
  },
);
