/** Lexicon JSON loading and the sentence template.
 *
 * The template must stay byte-identical to the training pipeline's
 * implementation; the golden-sentence fixture test enforces that.
 */

import { readFileSync } from "node:fs";

export interface AtomicMotion {
  id: string;
  phrase: string;
}

export interface ActivityClass {
  id: string;
  label: string;
  motions: string[];
}

export interface Lexicon {
  motions: Map<string, AtomicMotion>;
  classes: Map<string, ActivityClass>;
}

export function loadLexicon(path: string): Lexicon {
  const obj = JSON.parse(readFileSync(path, "utf-8"));
  const motions = new Map<string, AtomicMotion>();
  for (const entry of obj.motions ?? []) {
    if (motions.has(entry.id)) throw new Error(`duplicate motion id ${entry.id}`);
    if (!entry.phrase) throw new Error(`motion ${entry.id} has an empty phrase`);
    motions.set(entry.id, { id: entry.id, phrase: entry.phrase });
  }
  const classes = new Map<string, ActivityClass>();
  for (const entry of obj.classes ?? []) {
    if (classes.has(entry.id)) throw new Error(`duplicate class id ${entry.id}`);
    if (!entry.motions?.length) throw new Error(`class ${entry.id} has no motions`);
    for (const mid of entry.motions) {
      if (!motions.has(mid)) throw new Error(`class ${entry.id} references unknown motion ${mid}`);
    }
    classes.set(entry.id, {
      id: entry.id,
      label: entry.label ?? entry.id,
      motions: [...entry.motions],
    });
  }
  return { motions, classes };
}

function article(phrase: string): string {
  return "aeiou".includes(phrase[0]?.toLowerCase() ?? "") ? "an" : "a";
}

/**
 * One motion: "Perform a P1". Two: "Perform a P1 with a P2". Three or more:
 * items from the third on are each introduced by "followed by", except that
 * the final item of four or more is introduced by "and".
 */
export function buildSentence(cls: ActivityClass, lexicon: Lexicon): string {
  const phrases = cls.motions.map((mid) => {
    const motion = lexicon.motions.get(mid);
    if (!motion) throw new Error(`class ${cls.id} references unknown motion ${mid}`);
    return motion.phrase;
  });
  const parts = [`Perform ${article(phrases[0])} ${phrases[0]}`];
  if (phrases.length > 1) {
    parts.push(`with ${article(phrases[1])} ${phrases[1]}`);
  }
  for (let j = 2; j < phrases.length; j++) {
    const isLast = j === phrases.length - 1;
    const joiner = isLast && phrases.length >= 4 ? "and" : "followed by";
    parts.push(`${joiner} ${article(phrases[j])} ${phrases[j]}`);
  }
  return parts.join(" ");
}
