// HTTP embedding bridge.
//
// Wire protocol:
//   POST /embed  {"texts": ["...", ...]}  ->  {"vectors": [[...], ...], "dim": n}
//   GET  /health                          ->  {"status": "ok", "dim": n, "model": "..."}
//
// 400 on schema violations or empty texts, 413 over the batch cap,
// 503 from /health until the server is ready, 500 with an error string
// on anything unexpected. One JSON access-log line per request.

import { createServer, IncomingMessage, Server, ServerResponse } from "node:http";
import { DEFAULT_DIM, embed } from "./embedder.js";

export interface BridgeOptions {
  dim?: number;
  model?: string;
  batchCap?: number;
  /** Milliseconds after listen before /health reports ready. */
  warmupMs?: number;
}

const MAX_BODY_BYTES = 16 * 1024 * 1024;

function sendJson(res: ServerResponse, status: number, payload: unknown): number {
  const body = JSON.stringify(payload);
  res.writeHead(status, {
    "Content-Type": "application/json",
    "Content-Length": Buffer.byteLength(body),
  });
  res.end(body);
  return status;
}

function readBody(req: IncomingMessage): Promise<Buffer> {
  return new Promise((resolve, reject) => {
    const chunks: Buffer[] = [];
    let size = 0;
    req.on("data", (chunk: Buffer) => {
      size += chunk.length;
      if (size > MAX_BODY_BYTES) {
        reject(new Error("request body too large"));
        req.destroy();
        return;
      }
      chunks.push(chunk);
    });
    req.on("end", () => resolve(Buffer.concat(chunks)));
    req.on("error", reject);
  });
}

export function createBridgeServer(options: BridgeOptions = {}): Server {
  const dim = options.dim ?? Number(process.env.EMBED_DIM ?? DEFAULT_DIM);
  const model = options.model ?? process.env.EMBED_MODEL ?? `hashed-lex-${dim}`;
  const batchCap = options.batchCap ?? Number(process.env.EMBED_BATCH_CAP ?? 64);
  const warmupMs = options.warmupMs ?? 0;
  let ready = false;

  const server = createServer(async (req, res) => {
    const started = Date.now();
    let status: number;
    try {
      status = await route(req, res);
    } catch (err) {
      status = sendJson(res, 500, { error: String(err) });
    }
    console.log(
      JSON.stringify({
        method: req.method,
        path: req.url,
        status,
        ms: Date.now() - started,
      })
    );
  });

  async function route(req: IncomingMessage, res: ServerResponse): Promise<number> {
    if (req.method === "GET" && req.url === "/health") {
      if (!ready) {
        return sendJson(res, 503, { status: "loading" });
      }
      return sendJson(res, 200, { status: "ok", dim, model });
    }
    if (req.method === "POST" && req.url === "/embed") {
      let parsed: unknown;
      try {
        parsed = JSON.parse((await readBody(req)).toString("utf-8"));
      } catch {
        return sendJson(res, 400, { error: "body is not valid JSON" });
      }
      const texts = (parsed as { texts?: unknown })?.texts;
      if (!Array.isArray(texts) || texts.length === 0) {
        return sendJson(res, 400, { error: "texts must be a non-empty array" });
      }
      if (texts.length > batchCap) {
        return sendJson(res, 413, {
          error: `batch of ${texts.length} exceeds cap of ${batchCap}`,
        });
      }
      for (const [i, text] of texts.entries()) {
        if (typeof text !== "string" || text.trim().length === 0) {
          return sendJson(res, 400, { error: `texts[${i}] must be a non-empty string` });
        }
      }
      const vectors = (texts as string[]).map((t) => embed(t, dim));
      return sendJson(res, 200, { vectors, dim });
    }
    return sendJson(res, 404, { error: "unknown endpoint" });
  }

  server.on("listening", () => {
    if (warmupMs > 0) {
      setTimeout(() => {
        ready = true;
      }, warmupMs);
    } else {
      ready = true;
    }
  });
  return server;
}
