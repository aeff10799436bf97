/**
 * splitmix64 PRNG and FNV-1a hashing, mirroring the training pipeline's
 * generator so the deterministic test encoder produces the same embeddings.
 * Float draws use the top 53 bits (exactly representable as doubles).
 */

const MASK = (1n << 64n) - 1n;
const GOLDEN = 0x9e3779b97f4a7c15n;
const MIX1 = 0xbf58476d1ce4e5b9n;
const MIX2 = 0x94d049bb133111ebn;

const FNV_OFFSET = 0xcbf29ce484222325n;
const FNV_PRIME = 0x100000001b3n;

export function fnv1a64(text: string): bigint {
  let h = FNV_OFFSET;
  for (const byte of new TextEncoder().encode(text)) {
    h ^= BigInt(byte);
    h = (h * FNV_PRIME) & MASK;
  }
  return h;
}

export class SplitMix64 {
  private state: bigint;

  constructor(seed: bigint) {
    this.state = seed & MASK;
  }

  nextU64(): bigint {
    this.state = (this.state + GOLDEN) & MASK;
    let z = this.state;
    z = ((z ^ (z >> 30n)) * MIX1) & MASK;
    z = ((z ^ (z >> 27n)) * MIX2) & MASK;
    return (z ^ (z >> 31n)) & MASK;
  }

  /** Uniform in [0, 1). */
  nextFloat(): number {
    return Number(this.nextU64() >> 11n) * 2 ** -53;
  }

  /**
   * Standard normals via Box-Muller. Pair k consumes uniforms (u1, u2) and
   * emits r*cos(2*pi*u2), r*sin(2*pi*u2) with r = sqrt(-2*ln(1 - u1_raw)).
   */
  normals(n: number): Float64Array {
    const pairs = Math.ceil(n / 2);
    const out = new Float64Array(2 * pairs);
    for (let k = 0; k < pairs; k++) {
      const u1 = 1.0 - this.nextFloat();
      const u2 = this.nextFloat();
      const r = Math.sqrt(-2.0 * Math.log(u1));
      const theta = 2.0 * Math.PI * u2;
      out[2 * k] = r * Math.cos(theta);
      out[2 * k + 1] = r * Math.sin(theta);
    }
    return out.slice(0, n);
  }
}
