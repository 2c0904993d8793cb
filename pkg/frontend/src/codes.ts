/**
 * Client-side wagon code grammar and check-digit validation.
 *
 * Mirrors the server's validator exactly (the shared vector file in
 * tests/checkdigit_vectors.json keeps the two honest): weighted mod-11 over
 * the 6-digit serial, weights 7..2 left to right, where a computed value of
 * 10 means the serial has no assignable check digit and can never validate.
 */

export const UNASSIGNABLE = 10;

const WEIGHTS = [7, 6, 5, 4, 3, 2];
const WAGON_RE = /^([A-Z]{3})(\d{6})(\d)([A-Z]?)$/;
const LOCO_RE = /^\d{3,4}$/;

export interface WagonCode {
  kind: "wagon";
  letters: string;
  serial: string;
  check: number;
  region: string | null;
  text: string;
}

export interface LocomotiveCode {
  kind: "locomotive";
  digits: string;
  text: string;
}

export type ParsedCode = WagonCode | LocomotiveCode;

export function computeCheckDigit(serial: string): number {
  if (!/^\d{6}$/.test(serial)) {
    throw new Error(`serial must be exactly 6 digits, got ${JSON.stringify(serial)}`);
  }
  let total = 0;
  for (let i = 0; i < 6; i++) {
    total += WEIGHTS[i]! * Number(serial[i]);
  }
  return (11 - (total % 11)) % 11;
}

export function parseCode(text: string): ParsedCode | null {
  const cleaned = text.replace(/[-\s]/g, "").toUpperCase();
  const wagon = WAGON_RE.exec(cleaned);
  if (wagon) {
    const [, letters, serial, check, region] = wagon;
    return {
      kind: "wagon",
      letters: letters!,
      serial: serial!,
      check: Number(check),
      region: region || null,
      text: `${letters}-${serial}-${check}${region ?? ""}`,
    };
  }
  if (LOCO_RE.test(cleaned)) {
    return { kind: "locomotive", digits: cleaned, text: cleaned };
  }
  return null;
}

export interface ValidationResult {
  valid: boolean;
  error?: string;
}

/** Full grammar + check-digit precheck, usable before any network request. */
export function validateCodeText(text: string): ValidationResult {
  const parsed = parseCode(text);
  if (parsed === null) {
    return { valid: false, error: "matches neither wagon nor locomotive code pattern" };
  }
  if (parsed.kind === "locomotive") {
    return { valid: true };
  }
  const expected = computeCheckDigit(parsed.serial);
  if (expected === UNASSIGNABLE) {
    return { valid: false, error: "serial has no assignable check digit" };
  }
  if (expected !== parsed.check) {
    return { valid: false, error: `check digit should be ${expected}, not ${parsed.check}` };
  }
  return { valid: true };
}
