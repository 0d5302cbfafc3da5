// Browser entry point: mounts the app against the gateway that served
// the page (same origin).

import { ApiClient } from './api.js';
import { mountApp } from './app.js';
import type { WebSocketLike } from './stream.js';

const root = typeof document !== 'undefined' ? document.getElementById('app') : null;
if (root) {
  const scheme = window.location.protocol === 'https:' ? 'wss' : 'ws';
  mountApp(root, {
    api: new ApiClient(''),
    streamUrl: `${scheme}://${window.location.host}/v1/stream`,
    wsFactory: (url) => new WebSocket(url) as unknown as WebSocketLike,
  });
}
