/**
 * Trainer worker entry point.
 *
 * Reads one JSON request per stdin line, trains the requested architecture,
 * and writes one JSON response per stdout line, in request order. Requests
 * that fail (malformed JSON, unbuildable architecture, missing dataset, out
 * of memory) produce an error response; the loop itself keeps running until
 * stdin closes.
 *
 * Flags: --dataset-dir <path> (default ./data), --device cpu|gpu.
 */

import * as readline from "node:readline";

import { errorResponse, parseRequest, successResponse } from "./protocol.js";
import { runJob } from "./train.js";

interface Flags {
  datasetDir: string;
  device: "cpu" | "gpu";
}

export function parseFlags(argv: string[]): Flags {
  const flags: Flags = { datasetDir: "data", device: "cpu" };
  for (let i = 0; i < argv.length; i++) {
    if (argv[i] === "--dataset-dir") {
      flags.datasetDir = argv[++i] ?? flags.datasetDir;
    } else if (argv[i] === "--device") {
      const value = argv[++i];
      if (value !== "cpu" && value !== "gpu") {
        throw new Error(`--device must be cpu or gpu, got ${value}`);
      }
      flags.device = value;
    } else {
      throw new Error(`unknown flag ${argv[i]}`);
    }
  }
  return flags;
}

async function serve(flags: Flags): Promise<void> {
  if (flags.device === "gpu") {
    // The pure-JS backend has no GPU path; stay correct rather than fast.
    console.error("trainer: --device gpu not available in this build, using cpu");
  }
  const lines = readline.createInterface({ input: process.stdin, terminal: false });
  const pending: string[] = [];
  let working = false;
  let closed = false;

  const drain = async () => {
    if (working) return;
    working = true;
    while (pending.length > 0) {
      const line = pending.shift()!;
      if (!line.trim()) continue;
      let response: string;
      try {
        const request = parseRequest(line);
        const result = await runJob(request, flags.datasetDir);
        response = successResponse(result.testError, result.trainSeconds, result.meta);
      } catch (err) {
        response = errorResponse((err as Error).message);
      }
      process.stdout.write(response + "\n");
    }
    working = false;
    if (closed) process.exit(0);
  };

  lines.on("line", (line) => {
    pending.push(line);
    void drain();
  });
  await new Promise<void>((resolve) => lines.once("close", resolve));
  closed = true;
  if (!working && pending.length === 0) process.exit(0);
}

const isMain = process.argv[1]?.endsWith("main.js");
if (isMain) {
  serve(parseFlags(process.argv.slice(2))).catch((err) => {
    console.error(`trainer: fatal: ${(err as Error).message}`);
    process.exit(1);
  });
}
