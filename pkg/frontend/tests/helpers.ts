import type { DraftStorage, FetchLike } from '../src/types.js';

export class MapStorage implements DraftStorage {
  constructor(readonly map = new Map<string, string>()) {}
  getItem(key: string): string | null {
    return this.map.get(key) ?? null;
  }
  setItem(key: string, value: string): void {
    this.map.set(key, value);
  }
  removeItem(key: string): void {
    this.map.delete(key);
  }
}

export interface TraceEntry {
  url: string;
  body: string;
  responseBody: string;
  status: number;
}

/** Wrap a fetch implementation, recording every request and response. */
export function tracingFetch(inner: FetchLike, trace: TraceEntry[]): FetchLike {
  return async (url, init) => {
    const body = init?.body ? String(init.body) : '';
    const response = await inner(url, init);
    const text = await response.clone().text();
    trace.push({ url, body, responseBody: text, status: response.status });
    return response;
  };
}

interface StubSlotState {
  rated: Set<string>; // `${rater}:${sample}:${slot}`
}

/**
 * In-memory stand-in for the rating service, implementing just enough of the
 * wire protocol for flow tests: per-rater pending slots, 409 on re-submission,
 * 422-ish validation on score range.
 */
export function stubService(models: string[], samples: { id: string; text: string }[]) {
  const state: StubSlotState = { rated: new Set() };
  const nSlots = models.length;

  const fetchFn: FetchLike = async (url, init) => {
    const parsed = new URL(url, 'http://stub');
    const path = parsed.pathname;
    const json = (status: number, body: unknown) =>
      new Response(JSON.stringify(body), {
        status,
        headers: { 'Content-Type': 'application/json' },
      });

    if (path === '/rubric') {
      const anchors = Object.fromEntries(
        [1, 2, 3, 4, 5].map((i) => [String(i), `${i}: anchor text ${i}`]),
      );
      return json(200, {
        version: 'stub/1',
        scale_note: 'Rating ranges from 1 (bad) 2,3,4 to 5 (good)',
        dimensions: {
          correctness: { question: 'Correct?', anchors },
          completeness: { question: 'Complete?', anchors },
          readability: { question: 'Readable?', anchors },
        },
      });
    }

    const nextMatch = path.match(/^\/sessions\/([^/]+)\/next$/);
    if (nextMatch) {
      const rater = parsed.searchParams.get('rater') ?? '';
      for (let index = 0; index < samples.length; index += 1) {
        const sample = samples[index];
        const pending = [];
        for (let slot = 1; slot <= nSlots; slot += 1) {
          if (!state.rated.has(`${rater}:${sample.id}:${slot}`)) pending.push(slot);
        }
        if (pending.length) {
          return json(200, {
            done: false,
            item: {
              sample_id: sample.id,
              sample_index: index + 1,
              n_samples: samples.length,
              text: sample.text,
              responses: models.map((_, j) => ({
                slot: j + 1,
                label: `Response ${j + 1}`,
                text: `blinded response body ${sample.id}/${j + 1}`,
              })),
              pending_slots: pending,
            },
          });
        }
      }
      return json(200, { done: true });
    }

    const rateMatch = path.match(/^\/sessions\/([^/]+)\/ratings$/);
    if (rateMatch && init?.method === 'POST') {
      const body = JSON.parse(String(init.body));
      for (const dim of ['correctness', 'completeness', 'readability']) {
        const value = body[dim];
        if (!Number.isInteger(value) || value < 1 || value > 5) {
          return json(422, { detail: `${dim} out of range` });
        }
      }
      const key = `${body.rater_id}:${body.sample_id}:${body.display_slot}`;
      if (state.rated.has(key)) {
        return json(409, { detail: 'already rated' });
      }
      state.rated.add(key);
      return json(201, {
        status: 'recorded',
        sample_id: body.sample_id,
        display_slot: body.display_slot,
      });
    }

    return json(404, { detail: `no stub route for ${path}` });
  };

  return { fetchFn, state };
}
