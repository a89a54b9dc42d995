import { wireApp } from './app.js';

const DEFAULT_SERVICE_URL = 'http://127.0.0.1:8000';

const params = new URLSearchParams(window.location.search);
const serviceUrl = params.get('service') ?? DEFAULT_SERVICE_URL;

const root = document.getElementById('app');
if (root === null) {
  throw new Error('missing #app mount point');
}
wireApp(root, { serviceUrl });
