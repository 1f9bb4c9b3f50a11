import { RatingServiceClient } from './api.js';
import { renderDone, renderItem } from './dom.js';
import { RatingFlow } from './flow.js';

async function boot(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get('base') ?? 'http://127.0.0.1:8777';
  const sessionId = params.get('session') ?? 'session';
  const raterId = params.get('rater') ?? '';
  const root = document.getElementById('app')!;

  if (!raterId) {
    root.textContent = 'Missing ?rater= query parameter.';
    return;
  }

  const client = new RatingServiceClient(base);
  const flow = new RatingFlow({
    client,
    sessionId,
    raterId,
    storage: window.localStorage,
  });
  const rubric = await client.getRubric();

  const advance = async () => {
    await flow.loadNext();
    if (flow.done) {
      renderDone(root);
    } else {
      renderItem(root, flow, rubric, advance);
    }
  };
  await advance();
}

boot().catch((error) => {
  const root = document.getElementById('app');
  if (root) root.textContent = `Failed to start: ${error}`;
});
