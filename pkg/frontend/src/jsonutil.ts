/** Canonical JSON rendering byte-compatible with the server's golden files:
 * recursively sorted object keys, two-space indent, trailing newline. */

function sortValue(value: unknown): unknown {
  if (Array.isArray(value)) {
    return value.map(sortValue);
  }
  if (value !== null && typeof value === "object") {
    const out: Record<string, unknown> = {};
    for (const key of Object.keys(value as Record<string, unknown>).sort()) {
      out[key] = sortValue((value as Record<string, unknown>)[key]);
    }
    return out;
  }
  return value;
}

export function canonicalJson(value: unknown): string {
  return JSON.stringify(sortValue(value), null, 2) + "\n";
}

/** Strip the UI's own layout extension key before golden comparisons. */
export function stripLayout<T extends Record<string, unknown>>(doc: T): T {
  const clone = { ...doc };
  delete clone["layout"];
  return clone;
}
