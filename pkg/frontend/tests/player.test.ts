import { describe, expect, it } from "vitest";

import { SyncPlayer, type AudioSink } from "../src/player.js";

class FakeSink implements AudioSink {
  starts: Array<{ id: string; offset: number }> = [];
  stops = 0;

  start(id: string, offset: number): void {
    this.starts.push({ id, offset });
  }

  stop(): void {
    this.stops += 1;
  }
}

function makePlayer(duration = 4.0) {
  let t = 100.0; // arbitrary clock origin
  const sink = new FakeSink();
  const player = new SyncPlayer(sink, duration, () => t);
  return { sink, player, advance: (dt: number) => (t += dt) };
}

describe("SyncPlayer", () => {
  it("switching preserves the playback position within 50 ms", () => {
    const { sink, player, advance } = makePlayer();
    player.play("a");
    advance(1.234);
    const before = player.position();
    player.play("b");
    const after = player.position();
    expect(Math.abs(after - before)).toBeLessThan(0.05);
    expect(sink.starts[1].id).toBe("b");
    expect(Math.abs(sink.starts[1].offset - before)).toBeLessThan(0.05);
  });

  it("many rapid switches never drift the shared clock", () => {
    const { sink, player, advance } = makePlayer();
    player.play("a");
    for (let i = 0; i < 50; i++) {
      advance(0.07);
      player.play(i % 2 === 0 ? "b" : "a");
    }
    const expected = (0.07 * 50) % 4.0;
    expect(Math.abs(player.position() - expected)).toBeLessThan(0.05);
    expect(sink.starts.length).toBe(51);
  });

  it("loops: the position wraps modulo the stimulus duration", () => {
    const { player, advance } = makePlayer(2.5);
    player.play("a");
    advance(6.3);
    expect(player.position()).toBeCloseTo(6.3 % 2.5, 6);
  });

  it("pause keeps the clock running for a seamless resume", () => {
    const { sink, player, advance } = makePlayer();
    player.play("a");
    advance(1.0);
    player.pause();
    advance(0.5);
    player.play("a");
    expect(sink.starts[1].offset).toBeCloseTo(1.5, 6);
  });

  it("replaying the current stimulus is a no-op", () => {
    const { sink, player } = makePlayer();
    player.play("a");
    player.play("a");
    expect(sink.starts.length).toBe(1);
    expect(sink.stops).toBe(0);
  });

  it("reset rewinds to position zero", () => {
    const { player, advance } = makePlayer();
    player.play("a");
    advance(2.0);
    player.reset();
    expect(player.position()).toBe(0);
  });

  it("rejects a non-positive duration", () => {
    const sink = new FakeSink();
    expect(() => new SyncPlayer(sink, 0)).toThrow();
  });
});
