import { App } from "./app.js";

const root = document.getElementById("app");
if (!root) {
  throw new Error("missing #app mount point");
}
const params = new URLSearchParams(window.location.search);
const poll = Number(params.get("poll") ?? "5000");
new App(root, { pollIntervalMs: Number.isFinite(poll) && poll > 0 ? poll : 5000 }).start();
