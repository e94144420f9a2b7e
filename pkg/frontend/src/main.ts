// UI wiring: session bootstrap, canvas interaction, tau slider with live
// mask preview, edit submission with a single in-flight request, and a
// share link that reproduces the state.

import { EditClient, ApiError, type EditResponse } from './api.js';
import { decodeGrid, type DecodedGrid } from './lgrd.js';
import { gridToRgba, heatmapToRgba, overlayMask, blendHeatmap, type RgbaImage } from './render.js';
import {
  addClick, clampTau, completePairs, decodeShareLink, encodeShareLink,
  initialState, removePair, type EditorState,
} from './state.js';

const SCALE = 14; // canvas pixels per latent cell

const client = new EditClient('');

let state: EditorState = window.location.hash.length > 1
  ? safeDecode(window.location.hash)
  : initialState();
let sessionId = '';
let sourceGrid: DecodedGrid | null = null;
let editedGrid: DecodedGrid | null = null;
let lastEdit: EditResponse | null = null;
let inFlight = false;
let showHeatmap = false;

function safeDecode(hash: string): EditorState {
  try {
    return decodeShareLink(hash);
  } catch {
    return initialState();
  }
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const beforeCanvas = el<HTMLCanvasElement>('before');
const afterCanvas = el<HTMLCanvasElement>('after');
const tauSlider = el<HTMLInputElement>('tau');
const tauLabel = el<HTMLSpanElement>('tau-value');
const pairList = el<HTMLUListElement>('pairs');
const submitBtn = el<HTMLButtonElement>('submit');
const statusLine = el<HTMLParagraphElement>('status');
const timingsLine = el<HTMLParagraphElement>('timings');
const heatmapToggle = el<HTMLInputElement>('heatmap');
const shareLink = el<HTMLAnchorElement>('share');

function setStatus(text: string, isError = false): void {
  statusLine.textContent = text;
  statusLine.className = isError ? 'error' : '';
}

function paint(canvas: HTMLCanvasElement, img: RgbaImage): void {
  canvas.width = img.width * SCALE;
  canvas.height = img.height * SCALE;
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  const off = new OffscreenCanvas(img.width, img.height);
  const offCtx = off.getContext('2d');
  if (!offCtx) return;
  offCtx.putImageData(
    new ImageData(new Uint8ClampedArray(img.data), img.width, img.height),
    0, 0,
  );
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(off, 0, 0, canvas.width, canvas.height);
}

function drawMarkers(canvas: HTMLCanvasElement): void {
  const ctx = canvas.getContext('2d');
  if (!ctx) return;
  state.pairs.forEach((p, i) => {
    ctx.fillStyle = '#ff5050';
    ctx.beginPath();
    ctx.arc((p.handle.x + 0.5) * SCALE, (p.handle.y + 0.5) * SCALE, 4, 0, 2 * Math.PI);
    ctx.fill();
    if (p.target) {
      ctx.strokeStyle = '#ffd24d';
      ctx.beginPath();
      ctx.moveTo((p.handle.x + 0.5) * SCALE, (p.handle.y + 0.5) * SCALE);
      ctx.lineTo((p.target.x + 0.5) * SCALE, (p.target.y + 0.5) * SCALE);
      ctx.stroke();
      ctx.fillStyle = '#ffd24d';
      ctx.beginPath();
      ctx.arc((p.target.x + 0.5) * SCALE, (p.target.y + 0.5) * SCALE, 4, 0, 2 * Math.PI);
      ctx.fill();
    }
    ctx.fillStyle = '#fff';
    ctx.fillText(String(i + 1), (p.handle.x + 0.9) * SCALE, (p.handle.y + 0.2) * SCALE);
  });
}

async function redrawBefore(): Promise<void> {
  if (!sourceGrid) return;
  const img = gridToRgba(sourceGrid);
  const last = state.pairs[state.pairs.length - 1];
  if (last) {
    try {
      const mask = await client.maskPreview(sessionId, last.handle.x, last.handle.y, state.tau);
      overlayMask(img, mask);
    } catch (e) {
      if (!(e instanceof ApiError)) throw e;
      setStatus(`mask preview failed: ${e.message}`, true);
    }
  }
  paint(beforeCanvas, img);
  drawMarkers(beforeCanvas);
}

async function redrawAfter(): Promise<void> {
  if (!editedGrid) return;
  let img = gridToRgba(editedGrid);
  const last = state.pairs[state.pairs.length - 1];
  if (showHeatmap && last) {
    const att = await client.attention(sessionId, last.handle.x, last.handle.y);
    img = blendHeatmap(img, heatmapToRgba(att.weights, att.width, att.height));
  }
  paint(afterCanvas, img);
}

function renderPairList(): void {
  pairList.replaceChildren();
  state.pairs.forEach((p, i) => {
    const li = document.createElement('li');
    const desc = p.target
      ? `(${p.handle.x}, ${p.handle.y}) → (${p.target.x}, ${p.target.y})`
      : `(${p.handle.x}, ${p.handle.y}) → pick a target…`;
    li.textContent = desc + ' ';
    const btn = document.createElement('button');
    btn.textContent = '×';
    btn.title = 'remove this pair';
    btn.addEventListener('click', () => {
      state = removePair(state, i);
      syncAll();
    });
    li.appendChild(btn);
    pairList.appendChild(li);
  });
  submitBtn.disabled = inFlight || completePairs(state).length === 0;
}

function syncShareLink(): void {
  const href = window.location.pathname + encodeShareLink(state);
  shareLink.href = href;
  history.replaceState(null, '', href);
}

function syncAll(): void {
  renderPairList();
  syncShareLink();
  void redrawBefore();
  void redrawAfter();
}

beforeCanvas.addEventListener('click', (ev) => {
  if (!sourceGrid) return;
  const rect = beforeCanvas.getBoundingClientRect();
  const x = Math.floor(((ev.clientX - rect.left) / rect.width) * sourceGrid.width);
  const y = Math.floor(((ev.clientY - rect.top) / rect.height) * sourceGrid.height);
  if (x < 0 || y < 0 || x >= sourceGrid.width || y >= sourceGrid.height) return;
  state = addClick(state, { x, y });
  syncAll();
});

tauSlider.addEventListener('input', () => {
  state = { ...state, tau: clampTau(Number(tauSlider.value)) };
  tauLabel.textContent = state.tau.toFixed(2);
  syncShareLink();
  void redrawBefore();
});

heatmapToggle.addEventListener('change', () => {
  showHeatmap = heatmapToggle.checked;
  void redrawAfter();
});

submitBtn.addEventListener('click', () => void submitEdit());

async function submitEdit(): Promise<void> {
  if (inFlight) return;
  inFlight = true;
  submitBtn.disabled = true;
  setStatus('editing…');
  try {
    lastEdit = await client.applyEdit(sessionId, completePairs(state), { tau: state.tau });
    editedGrid = await client.fetchResult(lastEdit.result_url);
    const t = lastEdit.timings;
    timingsLine.textContent = Object.entries(t)
      .map(([k, v]) => `${k} ${(v * 1000).toFixed(1)} ms`)
      .join(' · ');
    setStatus(`edit #${lastEdit.n}: filled ${lastEdit.blanks_filled} blanks, ` +
      `${lastEdit.collisions} collisions`);
    await redrawAfter();
  } catch (e) {
    if (e instanceof ApiError) {
      setStatus(`edit failed (${e.code}): ${e.message}`, true);
    } else {
      setStatus(`edit failed: ${String(e)}`, true);
    }
  } finally {
    inFlight = false;
    renderPairList();
  }
}

async function bootstrap(): Promise<void> {
  tauSlider.value = String(state.tau);
  tauLabel.textContent = state.tau.toFixed(2);
  setStatus('creating session…');
  try {
    const info = await client.createSession(state.scene);
    sessionId = info.id;
    sourceGrid = await fetchSceneGrid(info.height, info.width);
    setStatus(`session ${sessionId} ready — click a handle, then a target`);
    syncAll();
  } catch (e) {
    setStatus(`session failed: ${String(e)}`, true);
  }
}

// The service serves grids only as edit results, so the "before" view shows
// the reconstruction baseline: a zero-drag edit at the grid centre, which
// the pipeline guarantees equals the no-edit inversion round-trip.
async function fetchSceneGrid(height: number, width: number): Promise<DecodedGrid> {
  const cx = Math.floor(width / 2);
  const cy = Math.floor(height / 2);
  const res = await client.applyEdit(sessionId, [
    { handle: { x: cx, y: cy }, target: { x: cx, y: cy } },
  ]);
  const roundtrip = await fetch(res.result_url);
  return decodeGrid(await roundtrip.arrayBuffer());
}

void bootstrap();
