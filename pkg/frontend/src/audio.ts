/** Web Audio implementation of the player's AudioSink. */

import type { AudioSink } from "./player.js";

export class WebAudioSink implements AudioSink {
  private readonly buffers = new Map<string, AudioBuffer>();
  private source: AudioBufferSourceNode | null = null;

  constructor(
    private readonly context: AudioContext,
    private readonly urlFor: (stimulusId: string) => string,
  ) {}

  /** Decode every stimulus up front so switching is instantaneous. */
  async preload(stimulusIds: string[]): Promise<number> {
    let duration = 0;
    await Promise.all(
      stimulusIds.map(async (id) => {
        if (this.buffers.has(id)) {
          return;
        }
        const res = await fetch(this.urlFor(id));
        if (!res.ok) {
          throw new Error(`failed to fetch stimulus ${id}: HTTP ${res.status}`);
        }
        const decoded = await this.context.decodeAudioData(
          await res.arrayBuffer(),
        );
        this.buffers.set(id, decoded);
      }),
    );
    for (const buf of this.buffers.values()) {
      duration = Math.max(duration, buf.duration);
    }
    return duration;
  }

  start(stimulusId: string, offsetSeconds: number): void {
    const buffer = this.buffers.get(stimulusId);
    if (!buffer) {
      throw new Error(`stimulus ${stimulusId} is not preloaded`);
    }
    this.stop();
    const source = this.context.createBufferSource();
    source.buffer = buffer;
    source.loop = true;
    source.connect(this.context.destination);
    source.start(0, offsetSeconds % buffer.duration);
    this.source = source;
  }

  stop(): void {
    if (this.source) {
      this.source.stop();
      this.source.disconnect();
      this.source = null;
    }
  }
}
