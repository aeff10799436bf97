/** OVHT embedding-table format: text header, entries sorted by class id,
 * floats as 16-digit big-endian IEEE-754 hex (lossless). This is the exact
 * layout the training pipeline reads and writes. */

export const TABLE_MAGIC = "OVHT";
export const TABLE_VERSION = 1;

export interface TableEntry {
  classId: string;
  sentence: string;
  embedding: Float64Array;
}

export interface Table {
  encoderName: string;
  dim: number;
  entries: TableEntry[];
}

export function floatToHex(value: number): string {
  const buf = new DataView(new ArrayBuffer(8));
  buf.setFloat64(0, value, false); // big-endian
  let out = "";
  for (let i = 0; i < 8; i++) out += buf.getUint8(i).toString(16).padStart(2, "0");
  return out;
}

export function hexToFloat(hex: string): number {
  if (hex.length !== 16 || /[^0-9a-f]/.test(hex)) throw new Error(`bad float hex ${hex}`);
  const buf = new DataView(new ArrayBuffer(8));
  for (let i = 0; i < 8; i++) buf.setUint8(i, parseInt(hex.slice(2 * i, 2 * i + 2), 16));
  return buf.getFloat64(0, false);
}

export function serializeTable(table: Table): string {
  const lines = [
    `${TABLE_MAGIC} ${TABLE_VERSION}`,
    `dim ${table.dim}`,
    `encoder ${table.encoderName}`,
    `count ${table.entries.length}`,
  ];
  const sorted = [...table.entries].sort((a, b) => (a.classId < b.classId ? -1 : 1));
  for (const entry of sorted) {
    if (entry.embedding.length !== table.dim) {
      throw new Error(
        `entry ${entry.classId} has ${entry.embedding.length} values, expected ${table.dim}`
      );
    }
    lines.push(`class ${entry.classId}`);
    lines.push(`sentence ${entry.sentence}`);
    lines.push(Array.from(entry.embedding, floatToHex).join(" "));
  }
  return lines.join("\n") + "\n";
}

export function parseTable(text: string): Table {
  const lines = text.split("\n");
  let index = 0;
  const next = (what: string): string => {
    if (index >= lines.length || (index === lines.length - 1 && lines[index] === "")) {
      throw new Error(`truncated table while reading ${what}`);
    }
    return lines[index++];
  };
  const keyed = (key: string): string => {
    const line = next(key);
    if (!line.startsWith(key + " ")) throw new Error(`expected ${key} line, got ${line.slice(0, 40)}`);
    return line.slice(key.length + 1);
  };
  const header = next("magic").split(" ");
  if (header[0] !== TABLE_MAGIC) throw new Error("bad table magic");
  if (Number(header[1]) !== TABLE_VERSION) throw new Error(`unsupported version ${header[1]}`);
  const dim = Number(keyed("dim"));
  const encoderName = keyed("encoder");
  const count = Number(keyed("count"));
  const entries: TableEntry[] = [];
  for (let i = 0; i < count; i++) {
    const classId = keyed("class");
    const sentence = keyed("sentence");
    const tokens = next(`embedding of ${classId}`).split(" ");
    if (tokens.length !== dim) {
      throw new Error(`entry ${classId} has ${tokens.length} values, expected ${dim}`);
    }
    entries.push({ classId, sentence, embedding: Float64Array.from(tokens, hexToFloat) });
  }
  return { encoderName, dim, entries };
}
