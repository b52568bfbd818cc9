import { clampActivation } from "./protocol.js";

/** Seconds a released control takes to decay back to zero activation. */
export const RELEASE_DECAY_S = 0.5;
/** Seconds of key hold to ramp from relaxed to full activation. */
export const KEY_RAMP_S = 1.5;

/**
 * The operator's virtual muscle. A slider engages at a fixed level; a held
 * key integrates upward like graded recruitment; releasing either decays the
 * value linearly to zero over RELEASE_DECAY_S, emulating the difficulty of
 * relaxing instantly. Time is injected so behavior is deterministic in tests.
 */
export class ActivationModel {
  private value = 0;
  private sliderEngaged = false;
  private keyHeld = false;

  get engaged(): boolean {
    return this.sliderEngaged || this.keyHeld;
  }

  get current(): number {
    return this.value;
  }

  setSlider(value: number): void {
    this.sliderEngaged = true;
    this.value = clampActivation(value);
  }

  releaseSlider(): void {
    this.sliderEngaged = false;
  }

  keyDown(): void {
    this.keyHeld = true;
  }

  keyUp(): void {
    this.keyHeld = false;
  }

  /** Advance the model by dt seconds and return the current activation. */
  update(dt: number): number {
    if (this.sliderEngaged) {
      // Slider holds its set point; nothing to integrate.
    } else if (this.keyHeld) {
      this.value = clampActivation(this.value + dt / KEY_RAMP_S);
    } else {
      this.value = clampActivation(this.value - dt / RELEASE_DECAY_S);
    }
    return this.value;
  }
}

/**
 * Emits the model's value at a fixed rate (>= 20 Hz) while the control is
 * engaged or still decaying. While the transport is down, at most one message
 * is buffered and newer values overwrite it (latest-wins).
 */
export class ActivationSender {
  private pending: number | null = null;

  constructor(
    private readonly send: (value: number) => boolean,
    public readonly periodMs = 50,
  ) {}

  /** Push one sample; returns true if it went out on the wire. */
  push(value: number): boolean {
    if (this.send(value)) {
      this.pending = null;
      return true;
    }
    this.pending = value;
    return false;
  }

  /** Retry the single buffered message, e.g. after a reconnect. */
  flush(): void {
    if (this.pending !== null && this.send(this.pending)) {
      this.pending = null;
    }
  }

  get buffered(): number | null {
    return this.pending;
  }
}
