/** CLI: export --lexicon <path> --out <path> [--model <id>] [--encoder gtr|test]
 *
 * Builds one description sentence per lexicon class, encodes it to a 768-d
 * embedding, and writes the OVHT table the training pipeline consumes.
 */

import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { EMBEDDING_DIM, Encoder, testEncoder, transformerEncoder } from "./encoders.js";
import { buildSentence, loadLexicon } from "./lexicon.js";
import { Table, serializeTable } from "./ovht.js";

const DEFAULT_MODEL = "Xenova/gtr-t5-base";

interface Args {
  lexicon: string;
  out: string;
  model: string;
  encoder: "gtr" | "test";
}

function parseArgs(argv: string[]): Args {
  const args: Partial<Args> = { model: DEFAULT_MODEL, encoder: "gtr" };
  for (let i = 0; i < argv.length; i++) {
    const flag = argv[i];
    const value = argv[i + 1];
    switch (flag) {
      case "--lexicon":
        args.lexicon = value;
        i++;
        break;
      case "--out":
        args.out = value;
        i++;
        break;
      case "--model":
        args.model = value;
        i++;
        break;
      case "--encoder":
        if (value !== "gtr" && value !== "test") throw new Error(`unknown encoder ${value}`);
        args.encoder = value;
        i++;
        break;
      default:
        throw new Error(`unknown flag ${flag}`);
    }
  }
  if (!args.lexicon || !args.out) {
    throw new Error("usage: export --lexicon <path> --out <path> [--model <id>] [--encoder gtr|test]");
  }
  return args as Args;
}

export async function exportTable(args: Args): Promise<Table> {
  const lexicon = loadLexicon(args.lexicon);
  if (lexicon.classes.size === 0) throw new Error("lexicon has no classes");
  const encoder: Encoder =
    args.encoder === "test" ? testEncoder() : await transformerEncoder(args.model);
  const table: Table = { encoderName: encoder.name, dim: EMBEDDING_DIM, entries: [] };
  for (const cls of [...lexicon.classes.values()].sort((a, b) => (a.id < b.id ? -1 : 1))) {
    const sentence = buildSentence(cls, lexicon);
    const embedding = await encoder.encode(cls, sentence, lexicon);
    if (embedding.length !== EMBEDDING_DIM) {
      throw new Error(`embedding for ${cls.id} has ${embedding.length} dims, expected ${EMBEDDING_DIM}`);
    }
    table.entries.push({ classId: cls.id, sentence, embedding });
  }
  return table;
}

async function main(): Promise<number> {
  let args: Args;
  try {
    args = parseArgs(process.argv.slice(2));
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 2;
  }
  try {
    const table = await exportTable(args);
    writeFileSync(args.out, serializeTable(table));
    console.log(
      `wrote ${table.entries.length} entries (encoder ${table.encoderName}) to ${args.out}`
    );
    return 0;
  } catch (err) {
    console.error(String(err instanceof Error ? err.message : err));
    return 1;
  }
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  main().then((code) => {
    process.exitCode = code;
  });
}
