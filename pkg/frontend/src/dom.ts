import type { RatingFlow } from './flow.js';
import { DIMENSIONS, type Dimension, type Rubric, type UiBlindedItem } from './types.js';

const SCALE = [1, 2, 3, 4, 5];

function el<K extends keyof HTMLElementTagNameMap>(
  tag: K,
  className?: string,
  text?: string,
): HTMLElementTagNameMap[K] {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text !== undefined) node.textContent = text;
  return node;
}

function rubricPanel(rubric: Rubric, dimension: Dimension): HTMLElement {
  const wrap = el('details', 'rubric');
  const summary = el('summary', undefined, `${dimension} rubric`);
  wrap.appendChild(summary);
  const dim = rubric.dimensions[dimension];
  wrap.appendChild(el('p', 'rubric-question', dim.question));
  const list = el('ul', 'rubric-anchors');
  for (const score of SCALE) {
    list.appendChild(el('li', undefined, dim.anchors[String(score)]));
  }
  wrap.appendChild(list);
  if (dim.annotation_note) {
    wrap.appendChild(el('p', 'rubric-note', dim.annotation_note));
  }
  return wrap;
}

function radioRow(
  flow: RatingFlow,
  slot: number,
  dimension: Dimension,
  onChange: () => void,
): HTMLElement {
  const row = el('div', 'dimension-row');
  row.appendChild(el('span', 'dimension-name', dimension));
  const draft = flow.getDraft(slot);
  for (const value of SCALE) {
    const label = el('label', 'score-choice');
    const input = el('input');
    input.type = 'radio';
    input.name = `score-${slot}-${dimension}`;
    input.value = String(value);
    input.checked = draft[dimension] === value;
    input.addEventListener('change', () => {
      flow.setScore(slot, dimension, value);
      onChange();
    });
    label.appendChild(input);
    label.appendChild(document.createTextNode(String(value)));
    row.appendChild(label);
  }
  return row;
}

function responseCard(
  flow: RatingFlow,
  rubric: Rubric,
  item: UiBlindedItem,
  slot: number,
  label: string,
  text: string,
  rerender: () => void,
): HTMLElement {
  const card = el('section', 'response-card');
  card.appendChild(el('h3', undefined, label));
  card.appendChild(el('pre', 'response-text', text));

  for (const dimension of DIMENSIONS) {
    card.appendChild(rubricPanel(rubric, dimension));
    card.appendChild(radioRow(flow, slot, dimension, rerender));
  }

  const note = el('textarea', 'annotation');
  note.placeholder = 'Optional annotation (e.g. identify false or misleading information)';
  note.value = flow.getDraft(slot).note ?? '';
  note.addEventListener('input', () => flow.setNote(slot, note.value));
  card.appendChild(note);

  const submit = el('button', 'submit-slot', `Submit ${label}`);
  submit.disabled = !flow.canSubmit(slot);
  if (flow.slotSubmitted(slot)) {
    submit.textContent = `${label} submitted`;
  }
  submit.addEventListener('click', async () => {
    submit.disabled = true;
    try {
      await flow.submit(slot);
    } catch (error) {
      alert(String(error));
    }
    rerender();
  });
  card.appendChild(submit);
  return card;
}

export function renderDone(root: HTMLElement): void {
  root.replaceChildren(el('h2', 'done', 'All samples rated. Thank you!'));
}

export function renderItem(
  root: HTMLElement,
  flow: RatingFlow,
  rubric: Rubric,
  onAdvance: () => void,
): void {
  const item = flow.current;
  if (!item) {
    renderDone(root);
    return;
  }
  const rerender = () => renderItem(root, flow, rubric, onAdvance);

  const page = el('div', 'item-page');
  page.appendChild(
    el('h2', 'progress', `Sample ${item.sample_index} of ${item.n_samples}`),
  );

  const noteWrap = el('details', 'source-note');
  noteWrap.open = true;
  noteWrap.appendChild(el('summary', undefined, 'Source note'));
  noteWrap.appendChild(el('pre', 'note-text', item.text));
  page.appendChild(noteWrap);

  const row = el('div', 'responses-row');
  for (const response of item.responses) {
    row.appendChild(
      responseCard(flow, rubric, item, response.slot, response.label, response.text, rerender),
    );
  }
  page.appendChild(row);

  const next = el('button', 'advance', 'Next sample');
  next.disabled = !flow.itemComplete();
  next.addEventListener('click', onAdvance);
  page.appendChild(next);

  root.replaceChildren(page);
}
