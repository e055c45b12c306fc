/** Rating submission with a retry buffer.
 *
 * Failed POSTs keep their records (values untouched) in the buffer; the
 * next flush retries them ahead of newer records, so nothing is lost or
 * reordered when the service is briefly unreachable.
 */

import type { RatingRecord } from "./api.js";

export type PostFn = (records: RatingRecord[]) => Promise<void>;

export class RatingsQueue {
  private buffer: RatingRecord[] = [];
  private flushing = false;

  constructor(private readonly post: PostFn) {}

  get pending(): readonly RatingRecord[] {
    return this.buffer;
  }

  /** Queue the records and try to send everything buffered so far. */
  async submit(records: RatingRecord[]): Promise<boolean> {
    this.buffer = this.buffer.concat(records.map((r) => ({ ...r })));
    return this.flush();
  }

  /** Returns true when the buffer was fully delivered. */
  async flush(): Promise<boolean> {
    if (this.flushing || this.buffer.length === 0) {
      return this.buffer.length === 0;
    }
    this.flushing = true;
    try {
      while (this.buffer.length > 0) {
        const batch = this.buffer;
        await this.post(batch);
        // anything submitted while the POST was in flight stays buffered
        this.buffer = this.buffer.slice(batch.length);
      }
      return true;
    } catch {
      return false;
    } finally {
      this.flushing = false;
    }
  }
}
