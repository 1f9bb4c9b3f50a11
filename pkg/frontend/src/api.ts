import type {
  FetchLike,
  NextItemEnvelope,
  RatingSubmission,
  Rubric,
  SubmitAck,
} from './types.js';

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    readonly detail: string,
  ) {
    super(`service error ${status}: ${detail}`);
  }
}

/** Thin typed client over the rating-service HTTP API. */
export class RatingServiceClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(this.baseUrl + path, init);
    const body = await response.text();
    if (!response.ok) {
      let detail = body;
      try {
        detail = JSON.parse(body).detail ?? body;
      } catch {
        // non-JSON error body: surface it verbatim
      }
      throw new ServiceError(response.status, String(detail));
    }
    return JSON.parse(body) as T;
  }

  getRubric(): Promise<Rubric> {
    return this.request<Rubric>('/rubric');
  }

  nextItem(sessionId: string, raterId: string): Promise<NextItemEnvelope> {
    const rater = encodeURIComponent(raterId);
    return this.request<NextItemEnvelope>(
      `/sessions/${encodeURIComponent(sessionId)}/next?rater=${rater}`,
    );
  }

  submitRating(sessionId: string, submission: RatingSubmission): Promise<SubmitAck> {
    return this.request<SubmitAck>(
      `/sessions/${encodeURIComponent(sessionId)}/ratings`,
      {
        method: 'POST',
        headers: { 'Content-Type': 'application/json' },
        body: JSON.stringify(submission),
      },
    );
  }
}
