import { readFileSync } from "node:fs";
import { dirname, join } from "node:path";
import { fileURLToPath } from "node:url";
import { describe, expect, it } from "vitest";

import {
  decodeFrame,
  encodeFrame,
  handshake,
  operatorInput,
  ProtocolError,
  pyFloatRepr,
  stamp,
} from "../src/protocol.js";

// One fixture file pins this codec and the server's codec to each other;
// regenerate with tools/gen_schema_vectors.py after any schema change.
const vectorsPath = join(
  dirname(fileURLToPath(import.meta.url)),
  "..", "..", "tests", "data", "schema_vectors.json",
);

interface ValidVector { name: string; frame: string; obj: unknown }
interface InvalidVector { name: string; frame: string; kind: string }

const vectors = JSON.parse(readFileSync(vectorsPath, "utf-8")) as {
  valid: ValidVector[];
  invalid: InvalidVector[];
};

describe("shared schema vectors", () => {
  it.each(vectors.valid.map((v) => [v.name, v] as const))(
    "%s round trips to identical bytes",
    (_name, vec) => {
      const msg = decodeFrame(vec.frame);
      expect(encodeFrame(msg)).toBe(vec.frame);
    },
  );

  it.each(vectors.invalid.map((v) => [v.name, v] as const))(
    "%s fails with kind %#",
    (_name, vec) => {
      let caught: unknown;
      try {
        decodeFrame(vec.frame);
      } catch (err) {
        caught = err;
      }
      expect(caught).toBeInstanceOf(ProtocolError);
      expect((caught as ProtocolError).kind).toBe(vec.kind);
    },
  );
});

describe("canonical float formatting", () => {
  const cases: [number, string][] = [
    [0, "0.0"],
    [-0, "-0.0"],
    [7, "7.0"],
    [-7, "-7.0"],
    [0.1, "0.1"],
    [100, "100.0"],
    [123456.789, "123456.789"],
    [1e-4, "0.0001"],
    [1e-5, "1e-05"],
    [1.5e-6, "1.5e-06"],
    [1e-7, "1e-07"],
    [2.5e-8, "2.5e-08"],
    [1e15, "1000000000000000.0"],
    [1e16, "1e+16"],
    [2.5e16, "2.5e+16"],
    [1e21, "1e+21"],
    [1e-100, "1e-100"],
    [0.1 + 0.2, "0.30000000000000004"],
    [Math.PI, "3.141592653589793"],
  ];
  it.each(cases)("formats %d as %s", (value, expected) => {
    expect(pyFloatRepr(value)).toBe(expected);
  });

  it("rejects non-finite values", () => {
    expect(() => pyFloatRepr(Number.NaN)).toThrow();
    expect(() => pyFloatRepr(Number.POSITIVE_INFINITY)).toThrow();
  });
});

describe("frame builders", () => {
  it("stamps timestamps at microsecond precision", () => {
    expect(stamp(1.23456789)).toBe(1.234568);
    const frame = operatorInput(0.123456789, [0, 0, 0], [0, 0, 0]);
    expect(frame.t).toBe(0.123457);
  });

  it("handshake carries the protocol version", () => {
    const line = encodeFrame(handshake("operator"));
    expect(JSON.parse(line)).toEqual({
      type: "handshake",
      version: 1,
      role: "operator",
    });
  });

  it("rejects frames that decode to the wrong shape", () => {
    expect(() => decodeFrame("")).toThrow(ProtocolError);
    expect(() => decodeFrame("42")).toThrow(ProtocolError);
  });
});
