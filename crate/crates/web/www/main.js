import init, { overfitCurve, MaskDemo, SweepDemo } from "./pkg/mfdepth_web.js";

const $ = (id) => document.getElementById(id);
const value = (id) => parseFloat($(id).value);

function showValues() {
  for (const out of document.querySelectorAll("output")) {
    out.textContent = $(out.htmlFor.value).value;
  }
}

function putRgba(canvas, width, height, bytes) {
  canvas.width = width;
  canvas.height = height;
  const img = new ImageData(new Uint8ClampedArray(bytes), width, height);
  canvas.getContext("2d").putImageData(img, 0, 0);
}

// Simple line plot with optional horizontal and vertical guides.
function plot(canvas, xs, ys, { hlines = [], vlines = [], marker = null, ylabel = "" } = {}) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  const pad = 40;
  ctx.clearRect(0, 0, w, h);
  const finite = ys.filter(Number.isFinite).concat(hlines);
  if (finite.length === 0) return;
  let lo = Math.min(...finite);
  let hi = Math.max(...finite);
  if (hi - lo < 1e-9) { lo -= 1; hi += 1; }
  const x0 = xs[0], x1 = xs[xs.length - 1];
  const px = (x) => pad + ((x - x0) / (x1 - x0)) * (w - 2 * pad);
  const py = (y) => h - pad - ((y - lo) / (hi - lo)) * (h - 2 * pad);

  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.font = "12px sans-serif";
  ctx.fillText(hi.toFixed(3), 2, pad + 4);
  ctx.fillText(lo.toFixed(3), 2, h - pad);
  ctx.fillText(x0.toFixed(2), pad, h - pad + 16);
  ctx.fillText(x1.toFixed(2), w - pad - 30, h - pad + 16);
  ctx.fillText(ylabel, pad + 4, pad - 8);

  ctx.setLineDash([4, 4]);
  for (const [y, colour] of hlines.map((y, i) => [y, ["#c33", "#36c", "#888"][i % 3]])) {
    ctx.strokeStyle = colour;
    ctx.beginPath();
    ctx.moveTo(pad, py(y));
    ctx.lineTo(w - pad, py(y));
    ctx.stroke();
  }
  for (const [x, colour] of vlines) {
    if (!Number.isFinite(x)) continue;
    ctx.strokeStyle = colour;
    ctx.beginPath();
    ctx.moveTo(px(x), pad);
    ctx.lineTo(px(x), h - pad);
    ctx.stroke();
  }
  ctx.setLineDash([]);

  ctx.strokeStyle = "#111";
  ctx.beginPath();
  let pen = false;
  xs.forEach((x, i) => {
    if (!Number.isFinite(ys[i])) { pen = false; return; }
    if (pen) ctx.lineTo(px(x), py(ys[i])); else ctx.moveTo(px(x), py(ys[i]));
    pen = true;
  });
  ctx.stroke();

  if (marker && Number.isFinite(marker[1])) {
    ctx.fillStyle = "#e60";
    ctx.beginPath();
    ctx.arc(px(marker[0]), py(marker[1]), 5, 0, 2 * Math.PI);
    ctx.fill();
  }
}

// Over-fit curve -----------------------------------------------------------

const PIXEL = [200, 90];
const SPEED_MIN = -1.5, SPEED_MAX = 1.5, STEPS = 121;

function drawCurve() {
  const ratios = overfitCurve(value("cam"), value("depth"), PIXEL[0], PIXEL[1], SPEED_MIN, SPEED_MAX, STEPS);
  const speeds = Array.from({ length: STEPS }, (_, i) => SPEED_MIN + ((SPEED_MAX - SPEED_MIN) * i) / (STEPS - 1));
  const s = value("speed");
  const [here] = overfitCurve(value("cam"), value("depth"), PIXEL[0], PIXEL[1], s, s, 2);
  plot($("curve"), speeds, ratios.map((r) => Math.min(r, 6)), {
    hlines: [2.0, 0.85, 1.0],
    marker: [s, Math.min(here, 6)],
    ylabel: "over-fit / true depth",
  });
  const kind = s === 0 ? "static" : s > 0 ? "co-directional" : "contra-directional";
  $("curve-readout").textContent = Number.isFinite(here)
    ? `${kind}: over-fit depth ${(here * value("depth")).toFixed(2)} = ${here.toFixed(3)} × true depth`
    : `${kind}: no finite depth explains this motion`;
}

// Masks ------------------------------------------------------------------

let maskDemo = null;

function loadMasks() {
  maskDemo?.free();
  maskDemo = new MaskDemo($("variant").value);
  putRgba($("overfit"), maskDemo.width, maskDemo.height, maskDemo.overfitPreview());
  drawMasks();
}

function drawMasks() {
  let view;
  try {
    view = maskDemo.masks(value("co"), value("con"));
  } catch (e) {
    $("mask-readout").textContent = String(e);
    return;
  }
  putRgba($("masks"), maskDemo.width, maskDemo.height, view.rgba);
  const pct = (x) => (Number.isFinite(x) ? (100 * x).toFixed(1) + "%" : "n/a");
  $("mask-readout").textContent =
    `M_co ${view.mCo} px, M_con ${view.mCon} px, M_i ${view.mI} px; ` +
    `movers ${view.movers} px, recall ${pct(view.recall)}, precision ${pct(view.precision)}`;
  view.free();
}

// Plane sweep ------------------------------------------------------------

let sweep = null;
let picked = [80, 60];

function loadSweep() {
  sweep?.free();
  sweep = new SweepDemo(value("baseline"));
  putRgba($("sweep-image"), sweep.width, sweep.height, sweep.image());
  putRgba($("sweep-hints"), sweep.width, sweep.height, sweep.hintPreview());
  drawProfile();
}

function drawProfile() {
  const [row, col] = picked;
  const p = sweep.profile(row, col);
  const [truth, hint] = [p[0], p[1]];
  const depths = [], costs = [];
  for (let i = 2; i < p.length; i += 2) {
    depths.push(p[i]);
    costs.push(p[i + 1]);
  }
  plot($("profile"), depths, costs, {
    vlines: [[truth, "#2a2"], [hint, "#e60"]],
    ylabel: "L1 cost",
  });
  const fmt = (x) => (Number.isFinite(x) ? x.toFixed(2) : "none");
  $("profile-readout").textContent =
    `pixel (${col}, ${row}): true depth ${fmt(truth)} (green), hint ${fmt(hint)} (orange)`;

  const ctx = $("sweep-image").getContext("2d");
  putRgba($("sweep-image"), sweep.width, sweep.height, sweep.image());
  ctx.strokeStyle = "#e60";
  ctx.strokeRect(col - 2.5, row - 2.5, 5, 5);
}

$("sweep-image").addEventListener("click", (ev) => {
  const canvas = ev.currentTarget;
  const rect = canvas.getBoundingClientRect();
  const col = Math.floor(((ev.clientX - rect.left) / rect.width) * canvas.width);
  const row = Math.floor(((ev.clientY - rect.top) / rect.height) * canvas.height);
  picked = [row, col];
  drawProfile();
});

// Wiring -----------------------------------------------------------------

function on(ids, event, fn) {
  for (const id of ids) $(id).addEventListener(event, () => { showValues(); fn(); });
}

await init();
showValues();
drawCurve();
loadMasks();
loadSweep();
$("status").textContent = "";

on(["cam", "depth", "speed"], "input", drawCurve);
on(["co", "con"], "input", drawMasks);
on(["variant"], "change", loadMasks);
on(["baseline"], "change", loadSweep);
$("baseline").addEventListener("input", showValues);
