import { ArenaClient } from "./api.js";
import { Board } from "./board.js";

const client = new ArenaClient("");
const root = document.getElementById("app");
if (!root) throw new Error("missing #app container");
const board = new Board(client, root);

const form = document.getElementById("new-session") as HTMLFormElement;
form.addEventListener("submit", (ev) => {
  ev.preventDefault();
  const n = Number((document.getElementById("n-input") as HTMLInputElement).value);
  const k = Number((document.getElementById("k-input") as HTMLInputElement).value);
  void board.start(n, k);
});

Object.assign(window as unknown as Record<string, unknown>, { board });
