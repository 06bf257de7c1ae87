import init, { Simulation, likelihood_grid } from "./pkg/slass_demo.js";

const AREA = 150;
const CELLS = 75;
const COLORS = ["#d62728", "#1f77b4", "#2ca02c"];

const field = document.getElementById("field");
const fctx = field.getContext("2d");
const heading = document.getElementById("heading");
const hctx = heading.getContext("2d");
const status = document.getElementById("status");
const $ = (id) => document.getElementById(id);

let sim = null;
let snap = null;
let trails = [];
let source = { x: 100, y: 100 };
let probe = { x: 10, y: 10 };
let timer = null;

const px = (x) => (x / AREA) * field.width;
const py = (y) => field.height - (y / AREA) * field.height;

function reset() {
  stop();
  if (sim) sim.free();
  try {
    sim = new Simulation(Number($("robots").value), $("policy").value, Number($("seed").value), source.x, source.y);
  } catch (e) {
    status.textContent = String(e);
    sim = null;
    return;
  }
  snap = JSON.parse(sim.snapshot());
  trails = snap.true_robots.map((p) => [p]);
  draw();
}

function step() {
  if (!sim || sim.done()) return stop();
  snap = JSON.parse(sim.step());
  snap.true_robots.forEach((p, k) => trails[k].push(p));
  draw();
  if (snap.done) stop();
}

function stop() {
  if (timer) clearInterval(timer);
  timer = null;
  $("play").textContent = "Play";
}

function drawLikelihood() {
  const z = Number($("range").value);
  const grid = likelihood_grid(probe.x, probe.y, z, CELLS);
  const w = field.width / CELLS;
  for (let i = 0; i < grid.length; i++) {
    const x = i % CELLS;
    const y = Math.floor(i / CELLS);
    fctx.fillStyle = `rgba(255,140,0,${grid[i] * 0.6})`;
    fctx.fillRect(x * w, field.height - (y + 1) * w, w, w);
  }
  fctx.fillStyle = "#000";
  fctx.fillRect(px(probe.x) - 3, py(probe.y) - 3, 6, 6);
}

function draw() {
  fctx.clearRect(0, 0, field.width, field.height);
  if ($("showLikelihood").checked) drawLikelihood();
  if (!snap) return;

  const peak = Math.max(...snap.source_cloud.map((p) => p[2]), 1e-12);
  for (const [x, y, w] of snap.source_cloud) {
    fctx.fillStyle = `rgba(120,0,160,${0.15 + 0.85 * (w / peak)})`;
    fctx.fillRect(px(x) - 1, py(y) - 1, 2, 2);
  }
  snap.robot_clouds.forEach((cloud, k) => {
    fctx.fillStyle = COLORS[k] + "55";
    for (const [x, y] of cloud) fctx.fillRect(px(x) - 1, py(y) - 1, 2, 2);
  });
  trails.forEach((trail, k) => {
    fctx.strokeStyle = COLORS[k];
    fctx.beginPath();
    trail.forEach((p, i) => (i ? fctx.lineTo(px(p.x), py(p.y)) : fctx.moveTo(px(p.x), py(p.y))));
    fctx.stroke();
  });
  snap.true_robots.forEach((p, k) => {
    fctx.fillStyle = COLORS[k];
    fctx.beginPath();
    fctx.arc(px(p.x), py(p.y), 5, 0, 2 * Math.PI);
    fctx.fill();
    const e = snap.robot_estimates[k];
    fctx.strokeStyle = COLORS[k];
    fctx.beginPath();
    fctx.arc(px(e.x), py(e.y), 8, 0, 2 * Math.PI);
    fctx.stroke();
  });
  marker(snap.true_source, "#000", 7);
  marker(snap.source_estimate, "#a0a", 5);

  status.textContent = [
    `cycle      ${snap.cycle}`,
    `status     ${snap.status}`,
    `est error  ${snap.source_error.toFixed(2)} m`,
    `objective  ${snap.objective == null ? "-" : snap.objective.toFixed(4)}`,
    `distances  ${snap.true_robots.map((p) => Math.hypot(p.x - snap.true_source.x, p.y - snap.true_source.y).toFixed(1)).join(", ")}`,
  ].join("\n");
  drawHeading();
}

function marker(p, color, r) {
  fctx.strokeStyle = color;
  fctx.lineWidth = 2;
  fctx.beginPath();
  fctx.moveTo(px(p.x) - r, py(p.y) - r);
  fctx.lineTo(px(p.x) + r, py(p.y) + r);
  fctx.moveTo(px(p.x) + r, py(p.y) - r);
  fctx.lineTo(px(p.x) - r, py(p.y) + r);
  fctx.stroke();
  fctx.lineWidth = 1;
}

function drawHeading() {
  hctx.clearRect(0, 0, heading.width, heading.height);
  if (!sim || snap.arrived[0]) return;
  let values;
  try {
    values = sim.heading_profile(0, 72);
  } catch (e) {
    return;
  }
  const lo = Math.min(...values);
  const hi = Math.max(...values);
  const c = heading.width / 2;
  const radius = (v) => 20 + (hi > lo ? (v - lo) / (hi - lo) : 1) * (c - 30);
  hctx.strokeStyle = "#ccc";
  hctx.beginPath();
  hctx.arc(c, c, 20, 0, 2 * Math.PI);
  hctx.stroke();
  hctx.strokeStyle = COLORS[0];
  hctx.beginPath();
  values.forEach((v, i) => {
    const t = (2 * Math.PI * i) / values.length;
    const r = radius(v);
    const x = c + r * Math.cos(t);
    const y = c - r * Math.sin(t);
    i ? hctx.lineTo(x, y) : hctx.moveTo(x, y);
  });
  hctx.closePath();
  hctx.stroke();
  hctx.fillStyle = "#000";
  hctx.fillText(`${lo.toFixed(3)} .. ${hi.toFixed(3)} nats`, 8, heading.height - 8);
}

field.addEventListener("click", (ev) => {
  const rect = field.getBoundingClientRect();
  const p = {
    x: ((ev.clientX - rect.left) / rect.width) * AREA,
    y: (1 - (ev.clientY - rect.top) / rect.height) * AREA,
  };
  if (ev.shiftKey) {
    probe = p;
  } else {
    source = p;
  }
  draw();
  if (!ev.shiftKey) marker(source, "#888", 7);
});

$("reset").onclick = reset;
$("step").onclick = step;
$("play").onclick = () => {
  if (timer) return stop();
  timer = setInterval(step, 30);
  $("play").textContent = "Pause";
};
$("range").oninput = () => {
  $("rangeValue").textContent = $("range").value;
  draw();
};
$("showLikelihood").onchange = draw;

await init();
reset();
