import init, { limit_set, orbit_heatmap, periodic } from './pkg/corrdyn_web.js';

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const canvas = $('view');
const ctx2d = canvas.getContext('2d');
let lastImage = null;
let lastPoints = null;

function view() {
  const px = Math.max(16, Math.min(1024, Math.round(num('px'))));
  return { cx: num('cx'), cy: num('cy'), width: num('width'), px };
}

function status(msg) {
  $('status').textContent = msg;
}

function toPixel(v, re, im) {
  const s = v.px / v.width;
  return [(re - v.cx) * s + v.px / 2, v.px / 2 - (im - v.cy) * s];
}

function paint(bytes, v) {
  canvas.width = canvas.height = v.px;
  lastImage = new ImageData(new Uint8ClampedArray(bytes), v.px, v.px);
  ctx2d.putImageData(lastImage, 0, 0);
  if (lastPoints) overlay(lastPoints, v);
}

function timed(label, f) {
  const t = performance.now();
  try {
    f();
    status(`${label}: ${(performance.now() - t).toFixed(0)} ms`);
  } catch (e) {
    status(`${label} failed: ${e.message ?? e}`);
  }
}

function drawLimit() {
  const v = view();
  timed('limit set', () => {
    paint(limit_set(num('are'), num('aim'), $('plus').checked,
      v.cx, v.cy, v.width, v.px, v.px, num('steps')), v);
  });
  redraw = drawLimit;
}

function drawMeasure() {
  const v = view();
  timed('orbit measure', () => {
    paint(orbit_heatmap(num('are'), num('aim'), num('zre'), num('zim'),
      num('depth'), $('backward').checked, v.cx, v.cy, v.width, v.px, v.px), v);
  });
  redraw = drawMeasure;
}

const sideColour = { '-1': '#0af', '0': '#fff', '1': '#f60', '2': '#f0f' };
const sideName = { '-1': 'minus', '0': 'fixed 1', '1': 'plus', '2': '?' };

function overlay(recs, v) {
  for (let k = 0; k < recs.length; k += 4) {
    const [x, y] = toPixel(v, recs[k], recs[k + 1]);
    ctx2d.fillStyle = sideColour[recs[k + 2]];
    ctx2d.beginPath();
    ctx2d.arc(x, y, 3 + recs[k + 3], 0, 2 * Math.PI);
    ctx2d.fill();
  }
}

function findPeriodic() {
  const v = view();
  timed('periodic points', () => {
    const recs = periodic(num('are'), num('aim'), num('period'));
    lastPoints = recs;
    if (lastImage) ctx2d.putImageData(lastImage, 0, 0);
    overlay(recs, v);
    const rows = ['<tr><th>re</th><th>im</th><th>side</th><th>mult</th></tr>'];
    for (let k = 0; k < recs.length; k += 4) {
      rows.push(`<tr><td>${recs[k].toFixed(8)}</td><td>${recs[k + 1].toFixed(8)}</td>` +
        `<td>${sideName[recs[k + 2]]}</td><td>${recs[k + 3]}</td></tr>`);
    }
    $('points').innerHTML = rows.join('');
  });
}

let redraw = drawLimit;

canvas.addEventListener('click', (ev) => {
  const v = view();
  const r = canvas.getBoundingClientRect();
  const s = v.width / r.width;
  $('cx').value = (v.cx + (ev.clientX - r.left - r.width / 2) * s).toPrecision(8);
  $('cy').value = (v.cy - (ev.clientY - r.top - r.height / 2) * s).toPrecision(8);
  if (ev.shiftKey) $('width').value = v.width * 2;
  if (ev.altKey) $('width').value = v.width / 2;
  redraw();
});

$('draw-limit').onclick = drawLimit;
$('draw-measure').onclick = drawMeasure;
$('find-periodic').onclick = findPeriodic;
$('are').onchange = $('aim').onchange = () => { lastPoints = null; $('points').innerHTML = ''; redraw(); };

await init();
drawLimit();
