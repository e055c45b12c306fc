/** Typed client for the rating service REST endpoints. */

export interface SessionTrial {
  trial: string;
  reference: string;
  conditions: string[];
}

export interface Session {
  participant: string;
  trials: SessionTrial[];
}

export interface RatingRecord {
  participant: string;
  trial: string;
  condition: string;
  rating: number;
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  async session(participant: string): Promise<Session> {
    const res = await fetch(
      `${this.baseUrl}/api/session/${encodeURIComponent(participant)}`,
    );
    if (!res.ok) {
      throw new Error(`session request failed: HTTP ${res.status}`);
    }
    return (await res.json()) as Session;
  }

  stimulusUrl(stimulusId: string): string {
    return `${this.baseUrl}/stimuli/${encodeURIComponent(stimulusId)}`;
  }

  async postRatings(records: RatingRecord[]): Promise<void> {
    const res = await fetch(`${this.baseUrl}/api/ratings`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ records }),
    });
    if (!res.ok) {
      throw new Error(`ratings request failed: HTTP ${res.status}`);
    }
  }
}
