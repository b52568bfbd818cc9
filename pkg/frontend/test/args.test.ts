import { describe, expect, it } from "vitest";

import { parseArgs } from "../src/main.js";

describe("parseArgs", () => {
  it("defaults to localhost:7780", () => {
    const args = parseArgs([]);
    expect(args.host).toBe("127.0.0.1");
    expect(args.port).toBe(7780);
    expect(args.session).toBe("default");
  });

  it("reads --server and --session flags", () => {
    const args = parseArgs(["--server", "10.0.0.5:9000", "--session", "trialA"]);
    expect(args.host).toBe("10.0.0.5");
    expect(args.port).toBe(9000);
    expect(args.session).toBe("trialA");
  });

  it("reads server and session from URL query parameters", () => {
    const args = parseArgs(["tcp://ignored/?server=192.168.1.2:7001&session=s7"]);
    expect(args.host).toBe("192.168.1.2");
    expect(args.port).toBe(7001);
    expect(args.session).toBe("s7");
  });

  it("takes the host part of a URL when no server query parameter is given", () => {
    const args = parseArgs(["tcp://172.16.0.9:7780/?session=lab"]);
    expect(args.host).toBe("172.16.0.9");
    expect(args.port).toBe(7780);
    expect(args.session).toBe("lab");
  });

  it("rejects an unusable port", () => {
    expect(() => parseArgs(["--server", "localhost:notaport"])).toThrow(RangeError);
    expect(() => parseArgs(["--server", "localhost:70000"])).toThrow(RangeError);
  });
});
