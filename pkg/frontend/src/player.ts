/** Synchronized looping playback across the stimuli of one trial.
 *
 * All stimuli of a trial share one clock: switching conditions resumes the
 * new stimulus at the position the old one was interrupted at, so the
 * listener hears a seamless A/B cut. Looping is implicit — positions wrap
 * modulo the stimulus duration.
 *
 * The audio output is abstracted behind `AudioSink` so the scheduling
 * logic can be tested against a fake clock.
 */

export interface AudioSink {
  /** Start looping `stimulusId` from `offsetSeconds` into the file. */
  start(stimulusId: string, offsetSeconds: number): void;
  stop(): void;
}

export type Clock = () => number; // seconds

export class SyncPlayer {
  private zeroTime: number | null = null; // clock time mapping to position 0
  private playing: string | null = null;

  constructor(
    private readonly sink: AudioSink,
    private readonly durationSeconds: number,
    private readonly now: Clock = () => performance.now() / 1000,
  ) {
    if (!(durationSeconds > 0)) {
      throw new Error("durationSeconds must be positive");
    }
  }

  /** Shared playback position, in seconds into the (looped) stimulus. */
  position(): number {
    if (this.zeroTime === null) {
      return 0;
    }
    const elapsed = this.now() - this.zeroTime;
    return ((elapsed % this.durationSeconds) + this.durationSeconds)
      % this.durationSeconds;
  }

  current(): string | null {
    return this.playing;
  }

  /** Start (or switch to) a stimulus at the current shared position. */
  play(stimulusId: string): void {
    if (this.playing === stimulusId) {
      return;
    }
    if (this.zeroTime === null) {
      this.zeroTime = this.now();
    }
    if (this.playing !== null) {
      this.sink.stop();
    }
    this.playing = stimulusId;
    this.sink.start(stimulusId, this.position());
  }

  /** Stop the audio; the shared clock keeps running for the next play(). */
  pause(): void {
    if (this.playing !== null) {
      this.sink.stop();
      this.playing = null;
    }
  }

  /** Stop and rewind the shared clock to position 0. */
  reset(): void {
    this.pause();
    this.zeroTime = null;
  }
}
