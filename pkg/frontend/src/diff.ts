/**
 * Token-level difference shading for the side-by-side pair view.
 *
 * Splits each text into word/whitespace/symbol tokens, aligns the two
 * token streams with a longest-common-subsequence pass, and marks the
 * tokens outside the alignment as changed. Concatenating a side's
 * segment texts always reproduces the input byte for byte; the shading
 * is advisory only.
 */

export interface DiffSegment {
  text: string;
  changed: boolean;
}

const TOKEN_RE = /\w+|\s+|[^\w\s]+/g;

/** Above this many tokens per side the quadratic LCS is skipped. */
export const DIFF_TOKEN_CAP = 1500;

export function tokenize(text: string): string[] {
  return text.match(TOKEN_RE) ?? [];
}

function lcsKeepFlags(left: string[], right: string[]): [boolean[], boolean[]] {
  const n = left.length;
  const m = right.length;
  const width = m + 1;
  const table = new Int32Array((n + 1) * width);
  for (let i = n - 1; i >= 0; i--) {
    for (let j = m - 1; j >= 0; j--) {
      table[i * width + j] = left[i] === right[j]
        ? table[(i + 1) * width + j + 1] + 1
        : Math.max(table[(i + 1) * width + j], table[i * width + j + 1]);
    }
  }
  const keepLeft = new Array<boolean>(n).fill(false);
  const keepRight = new Array<boolean>(m).fill(false);
  let i = 0;
  let j = 0;
  while (i < n && j < m) {
    if (left[i] === right[j]) {
      keepLeft[i] = true;
      keepRight[j] = true;
      i++;
      j++;
    } else if (table[(i + 1) * width + j] >= table[i * width + j + 1]) {
      i++;
    } else {
      j++;
    }
  }
  return [keepLeft, keepRight];
}

function toSegments(tokens: string[], keep: boolean[]): DiffSegment[] {
  const segments: DiffSegment[] = [];
  for (let i = 0; i < tokens.length; i++) {
    const changed = !keep[i] && !/^\s+$/.test(tokens[i]);
    const last = segments[segments.length - 1];
    if (last && last.changed === changed) {
      last.text += tokens[i];
    } else {
      segments.push({ text: tokens[i], changed });
    }
  }
  return segments;
}

/**
 * Returns shading segments for (left, right). Identical texts and
 * oversized inputs come back as one unchanged segment per side.
 */
export function tokenDiff(left: string, right: string): [DiffSegment[], DiffSegment[]] {
  if (left === right) {
    return [
      left ? [{ text: left, changed: false }] : [],
      right ? [{ text: right, changed: false }] : [],
    ];
  }
  const leftTokens = tokenize(left);
  const rightTokens = tokenize(right);
  if (leftTokens.length > DIFF_TOKEN_CAP || rightTokens.length > DIFF_TOKEN_CAP) {
    return [
      left ? [{ text: left, changed: false }] : [],
      right ? [{ text: right, changed: false }] : [],
    ];
  }
  const [keepLeft, keepRight] = lcsKeepFlags(leftTokens, rightTokens);
  return [toSegments(leftTokens, keepLeft), toSegments(rightTokens, keepRight)];
}

/** Byte-faithfulness helper used by tests. */
export function joinSegments(segments: DiffSegment[]): string {
  return segments.map((s) => s.text).join("");
}
