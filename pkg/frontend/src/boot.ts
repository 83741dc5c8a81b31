/**
 * Browser entry point: collect the bearer token once per session, then
 * mount the dashboard and keep the viewport class in sync with resizes.
 */

import { ApiClient, storedToken, storeToken } from "./api.js";
import { mountApp } from "./main.js";

function start(root: HTMLElement, token: string): void {
  const handle = mountApp(root, {
    source: new ApiClient(token),
    initialWidth: window.innerWidth,
  });
  window.addEventListener("resize", () => {
    handle.setViewportWidth(window.innerWidth);
  });
}

function tokenForm(root: HTMLElement): void {
  const form = document.createElement("form");
  form.className = "token-form";
  const label = document.createElement("label");
  label.textContent = "API token";
  const input = document.createElement("input");
  input.type = "password";
  input.required = true;
  label.append(input);
  const submit = document.createElement("button");
  submit.type = "submit";
  submit.textContent = "Open dashboard";
  form.append(label, submit);
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const token = input.value.trim();
    if (token === "") return;
    storeToken(token);
    start(root, token);
  });
  root.replaceChildren(form);
  input.focus();
}

const root = document.getElementById("app");
if (root !== null) {
  const token = storedToken();
  if (token !== null && token !== "") {
    start(root, token);
  } else {
    tokenForm(root);
  }
}
