// Editor state: drag point pairs, the mask threshold, and the share-link
// codec that round-trips both through a URL fragment.

export interface GridPoint {
  x: number;
  y: number;
}

export interface DragPair {
  handle: GridPoint;
  /** Missing while the user has clicked a handle but not yet a target. */
  target: GridPoint | null;
}

export interface EditorState {
  scene: string;
  tau: number;
  pairs: DragPair[];
}

export const TAU_MIN = 1.0;
export const TAU_MAX = 3.0;
export const TAU_DEFAULT = 2.0;

export function initialState(scene = 'blob-32x32'): EditorState {
  return { scene, tau: TAU_DEFAULT, pairs: [] };
}

export function clampTau(tau: number): number {
  if (!Number.isFinite(tau)) return TAU_DEFAULT;
  return Math.min(TAU_MAX, Math.max(TAU_MIN, tau));
}

/** First click starts a pair at the handle; the next completes its target. */
export function addClick(state: EditorState, p: GridPoint): EditorState {
  const pairs = state.pairs.slice();
  const last = pairs[pairs.length - 1];
  if (last && last.target === null) {
    pairs[pairs.length - 1] = { handle: last.handle, target: p };
  } else {
    pairs.push({ handle: p, target: null });
  }
  return { ...state, pairs };
}

export function removePair(state: EditorState, index: number): EditorState {
  if (index < 0 || index >= state.pairs.length) return state;
  const pairs = state.pairs.slice();
  pairs.splice(index, 1);
  return { ...state, pairs };
}

export function updatePair(state: EditorState, index: number, pair: DragPair): EditorState {
  if (index < 0 || index >= state.pairs.length) return state;
  const pairs = state.pairs.slice();
  pairs[index] = pair;
  return { ...state, pairs };
}

/** Pairs that have both endpoints and can be submitted. */
export function completePairs(state: EditorState): DragPair[] {
  return state.pairs.filter((p) => p.target !== null);
}

// Share links pack the state into a fragment like
//   #scene=blob-32x32&tau=2.1&pairs=4,5:9,5;10,2:10,8
// so a session can be reproduced by opening the URL.

export function encodeShareLink(state: EditorState): string {
  const pairs = completePairs(state)
    .map((p) => `${p.handle.x},${p.handle.y}:${p.target!.x},${p.target!.y}`)
    .join(';');
  const params = new URLSearchParams();
  params.set('scene', state.scene);
  params.set('tau', String(state.tau));
  if (pairs) params.set('pairs', pairs);
  return '#' + params.toString();
}

function parsePoint(text: string): GridPoint {
  const m = /^(-?\d+),(-?\d+)$/.exec(text);
  if (!m) throw new Error(`bad point ${JSON.stringify(text)}`);
  return { x: Number(m[1]), y: Number(m[2]) };
}

export function decodeShareLink(fragment: string): EditorState {
  const raw = fragment.startsWith('#') ? fragment.slice(1) : fragment;
  const params = new URLSearchParams(raw);
  const state = initialState(params.get('scene') ?? undefined);
  const tau = params.get('tau');
  if (tau !== null) state.tau = clampTau(Number(tau));
  const pairs = params.get('pairs');
  if (pairs) {
    state.pairs = pairs.split(';').map((spec) => {
      const [h, t] = spec.split(':');
      if (h === undefined || t === undefined) {
        throw new Error(`bad pair ${JSON.stringify(spec)}`);
      }
      return { handle: parsePoint(h), target: parsePoint(t) };
    });
  }
  return state;
}
