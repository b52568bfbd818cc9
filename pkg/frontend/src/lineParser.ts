/**
 * Newline framing for a byte stream: buffers partial lines across chunks and
 * emits one decoded JSON value per complete line.
 */
export class LineParser {
  private buffer = "";

  constructor(
    private readonly onMessage: (value: unknown) => void,
    private readonly onMalformed?: (rawLine: string) => void,
  ) {}

  feed(chunk: Buffer | string): void {
    this.buffer += chunk.toString();
    const lines = this.buffer.split("\n");
    // The last element is a partial line (or "" when the chunk ended on \n).
    this.buffer = lines.pop()!;
    for (const line of lines) {
      const trimmed = line.trim();
      if (trimmed.length === 0) continue;
      let value: unknown;
      try {
        value = JSON.parse(trimmed);
      } catch {
        this.onMalformed?.(trimmed);
        continue;
      }
      this.onMessage(value);
    }
  }

  /** Bytes held back waiting for their closing newline. */
  get pending(): string {
    return this.buffer;
  }

  reset(): void {
    this.buffer = "";
  }
}
